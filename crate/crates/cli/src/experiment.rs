//! Preset runs and coefficient sweeps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use thickness_core::exact1d::reference_film_solution;
use thickness_core::{
    assemble, film_error, solve, thickness_field, DomainSpec, Field, Mesh, SolveReport, SolverOptions,
    ThicknessField,
};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::heatmap;

pub const SUMMARY_HEADER: &str = "preset,a,nx,ny,R,l2_inv_error,theorem_bound,band_fraction,iterations";

/// A coefficient is under-resolved when `√a < 4 · (interface spacing)`.
pub const FLOOR_FACTOR: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub a: f64,
    pub nx: usize,
    pub ny: usize,
    pub r: f64,
    pub l2_inv_error: f64,
    pub theorem_bound: Option<f64>,
    pub band_fraction: f64,
    pub iterations: usize,
    pub sx_norm: f64,
    pub under_resolved: bool,
    /// Nodal sup of `s^y − s̄` on flat domains, where `s̄` is exact.
    pub sup_error_1d: Option<f64>,
}

impl CaseResult {
    pub fn summary_row(&self, preset: &str) -> String {
        let bound = self.theorem_bound.map_or_else(|| "n/a".to_string(), |b| format!("{b:e}"));
        format!(
            "{preset},{:e},{},{},{:e},{:e},{bound},{:e},{}",
            self.a, self.nx, self.ny, self.r, self.l2_inv_error, self.band_fraction, self.iterations
        )
    }
}

pub fn format_a(a: f64) -> String {
    format!("{a:e}")
}

pub fn is_under_resolved(mesh: &Mesh<f64>, a: f64) -> bool {
    a.sqrt() < FLOOR_FACTOR * mesh.interface_spacing()
}

fn check_converged(report: &SolveReport, what: &str, a: f64) -> Result<()> {
    if report.converged {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "{what} at a = {a:e} stopped after {} iterations with relative residual {:e}",
            report.iterations, report.relative_residual
        )))
    }
}

/// Solves both components at one coefficient and evaluates the thickness field.
pub fn solve_case<'m>(
    spec: &DomainSpec<f64>,
    mesh: &'m Mesh<f64>,
    a: f64,
    band: (f64, f64),
    options: &SolverOptions,
) -> Result<(CaseResult, ThicknessField<f64>, Field<'m, f64>)> {
    let (sys_x, sys_y) = assemble(mesh, a)?;
    let (sx, rx) = solve(&sys_x, options)?;
    check_converged(&rx, "s^x", a)?;
    let (sy, ry) = solve(&sys_y, options)?;
    check_converged(&ry, "s^y", a)?;
    let tf = thickness_field(&sx, &sy, a, spec.thickness())?;
    let report = film_error(&tf, spec, a, band)?;
    let constants = spec.derive_constants()?;
    let sup_error_1d = if spec.is_flat() {
        let (p, s) = reference_film_solution(spec, a)?;
        Some(
            mesh.nodes()
                .iter()
                .zip(sy.values())
                .map(|(&[_, y], &v)| (v - s.eval(&p, y)).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let (nx, ny) = mesh.resolution();
    let result = CaseResult {
        a,
        nx,
        ny,
        r: constants.r,
        l2_inv_error: report.l2_inv_error,
        theorem_bound: report.theorem_bound,
        band_fraction: report.band_fraction,
        iterations: rx.iterations + ry.iterations,
        sx_norm: sx.l2_norm(),
        under_resolved: is_under_resolved(mesh, a),
        sup_error_1d,
    };
    Ok((result, tf, sy))
}

/// Runs every coefficient of `config`, writing `summary.csv`, `thickness_<a>.csv` and
/// `heatmap_<a>.ppm` into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, quick: bool) -> Result<Vec<CaseResult>> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let (nx, ny) = config.resolution(quick);
    let mesh = Mesh::build(&config.spec, nx, ny)?;
    let quality = mesh.quality();
    if quality.is_degenerate() {
        eprintln!(
            "warning: smallest mesh angle is {:.2} degrees; consider raising nx",
            quality.min_angle_deg
        );
    }
    let options = SolverOptions::default();
    let mut results = Vec::with_capacity(config.a_list.len());
    let mut summary = BufWriter::new(File::create(out.join("summary.csv"))?);
    writeln!(summary, "{SUMMARY_HEADER}")?;
    for &a in &config.a_list {
        let (result, tf, _) = solve_case(&config.spec, &mesh, a, config.band, &options)?;
        let tag = format_a(a);
        tf.write_csv(BufWriter::new(File::create(out.join(format!("thickness_{tag}.csv")))?))?;
        heatmap::render(&mesh, &tf, config.band)
            .write_ppm(BufWriter::new(File::create(out.join(format!("heatmap_{tag}.ppm")))?))?;
        writeln!(summary, "{}", result.summary_row(config.label()))?;
        results.push(result);
    }
    summary.flush()?;
    Ok(results)
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<CaseResult>,
    /// `None` when the assertion does not apply (wavy domain or fewer than two resolved rows).
    pub monotone: Option<bool>,
}

pub const CONVERGENCE_HEADER: &str = "a,l2_inv_error,theorem_bound,sup_error_1d,status";

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CONVERGENCE_HEADER}")?;
        for r in &self.rows {
            let bound = r.theorem_bound.map_or_else(|| "n/a".to_string(), |b| format!("{b:e}"));
            let sup = r.sup_error_1d.map_or_else(|| "n/a".to_string(), |s| format!("{s:e}"));
            let status = if r.under_resolved { "under-resolved" } else { "ok" };
            writeln!(w, "{:e},{:e},{bound},{sup},{status}", r.a, r.l2_inv_error)?;
        }
        Ok(())
    }
}

/// Strict decrease of `l2_inv_error` along decreasing `a`, skipping under-resolved rows.
pub fn monotone_above_floor(rows: &[CaseResult]) -> Option<bool> {
    let mut resolved: Vec<&CaseResult> = rows.iter().filter(|r| !r.under_resolved).collect();
    if resolved.len() < 2 {
        return None;
    }
    resolved.sort_by(|p, q| q.a.total_cmp(&p.a));
    Some(resolved.windows(2).all(|w| w[1].l2_inv_error < w[0].l2_inv_error))
}

/// Runs the sweep, writes `convergence.csv` next to the regular outputs, and fails with a
/// check error when a flat domain does not converge monotonically above the mesh floor.
pub fn run_convergence(config: &ExperimentConfig, out: &Path, quick: bool) -> Result<ConvergenceTable> {
    let rows = run_experiment(config, out, quick)?;
    let monotone = if config.spec.is_flat() { monotone_above_floor(&rows) } else { None };
    let table = ConvergenceTable { rows, monotone };
    table.write_csv(BufWriter::new(File::create(out.join("convergence.csv"))?))?;
    if monotone == Some(false) {
        return Err(CliError::Check("l2_inv_error does not decrease monotonically above the mesh floor".into()));
    }
    Ok(table)
}
