use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thickness_core::verify::write_jsonl;
use thickness_core::{assemble, Mesh};
use thickness_lab::checks::{failures, run_checks, CheckOptions};
use thickness_lab::experiment::{format_a, run_convergence, run_experiment, CaseResult, SUMMARY_HEADER};
use thickness_lab::{CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "thickness-lab", version, about = "Fictitious-thickness experiments on thin films")]
struct Cli {
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the coarse meshes.
    #[arg(long, global = true)]
    quick: bool,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every coefficient of a config file or preset.
    Run { config: String },
    /// Coefficient sweep with a convergence table.
    Sweep { config: String },
    /// Run the verification battery.
    Check {
        /// Relative CG tolerance used by the battery.
        #[arg(long, default_value_t = 1e-10)]
        cg_tol: f64,
    },
    /// Write the mesh and the assembled matrix for the first coefficient.
    ExportMesh { config: String },
}

fn out_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("output"))
}

fn print_rows(label: &str, rows: &[CaseResult]) {
    println!("{SUMMARY_HEADER},status");
    for r in rows {
        let status = if r.under_resolved { "under-resolved" } else { "ok" };
        println!("{},{status}", r.summary_row(label));
    }
}

fn export_mesh(config: &ExperimentConfig, out: &Path, quick: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let (nx, ny) = config.resolution(quick);
    let mesh = Mesh::build(&config.spec, nx, ny)?;
    mesh.write_text(BufWriter::new(File::create(out.join("mesh.txt"))?))?;
    let a = config.a_list[0];
    let (_, sys_y) = assemble(&mesh, a)?;
    let path = out.join(format!("matrix_{}.mtx", format_a(a)));
    sys_y.matrix().write_matrix_market(BufWriter::new(File::create(&path)?))?;
    println!(
        "{} nodes, {} triangles, {} unknowns -> {}",
        mesh.node_count(),
        mesh.triangle_count(),
        sys_y.n(),
        out.display()
    );
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(config)?;
            let rows = run_experiment(&config, &out_dir(cli, Some(&config)), cli.quick)?;
            print_rows(config.label(), &rows);
        }
        Command::Sweep { config } => {
            let config = ExperimentConfig::load(config)?;
            let table = run_convergence(&config, &out_dir(cli, Some(&config)), cli.quick)?;
            print_rows(config.label(), &table.rows);
            match table.monotone {
                Some(true) => println!("l2_inv_error decreases monotonically above the mesh floor"),
                Some(false) => unreachable!("non-monotone sweeps are reported as errors"),
                None => println!("monotonicity not asserted"),
            }
        }
        Command::Check { cg_tol } => {
            let out = out_dir(cli, None);
            std::fs::create_dir_all(&out)?;
            let opts = CheckOptions { seed: cli.seed, cg_tol: *cg_tol, traces: if cli.quick { 4 } else { 20 }, quick: cli.quick };
            if !(opts.cg_tol > 0.0 && opts.cg_tol < 1.0) {
                return Err(CliError::Config(format!("--cg-tol must lie in (0, 1), got {}", opts.cg_tol)));
            }
            let records = run_checks(&opts)?;
            write_jsonl(BufWriter::new(File::create(out.join("checks.jsonl"))?), &records)?;
            let failed = failures(&records);
            println!("{} checks, {} gated failures", records.len(), failed.len());
            if !failed.is_empty() {
                let names: Vec<&str> = failed.iter().map(|r| r.case.as_str()).collect();
                return Err(CliError::Check(names.join(", ")));
            }
        }
        Command::ExportMesh { config } => {
            let config = ExperimentConfig::load(config)?;
            export_mesh(&config, &out_dir(cli, Some(&config)), cli.quick)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // usage errors are config errors (exit 1); clap would otherwise use 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
