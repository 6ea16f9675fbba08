use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thickness-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("thickness-lab-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn run_preset_writes_all_outputs() {
    let out = scratch("run");
    let o = run(&["run", "film-k2", "--quick"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "preset,a,nx,ny,R,l2_inv_error,theorem_bound,band_fraction,iterations");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "film-k2");
    assert_eq!(first[1], "1e-4");
    assert_eq!(first[6], "n/a");
    assert!(first[7].parse::<f64>().unwrap() > 0.95);
    assert_eq!(lines.count(), 1);
    for a in ["1e-4", "1e-6"] {
        let csv = std::fs::read_to_string(out.join(format!("thickness_{a}.csv"))).unwrap();
        assert!(csv.starts_with("cx,cy,div_s,inv_h,h,flag\n"));
        let ppm = std::fs::read(out.join(format!("heatmap_{a}.ppm"))).unwrap();
        assert!(ppm.starts_with(b"P6\n400 1200\n255\n"));
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let (o1, o2) = (scratch("det1"), scratch("det2"));
    assert!(run(&["run", "film-k1", "--quick", "--seed", "3"], &o1).status.success());
    assert!(run(&["run", "film-k1", "--quick", "--seed", "3"], &o2).status.success());
    for f in ["summary.csv", "thickness_1e-4.csv", "thickness_1e-6.csv", "heatmap_1e-4.ppm"] {
        assert_eq!(std::fs::read(o1.join(f)).unwrap(), std::fs::read(o2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_errors_exit_one() {
    let out = scratch("cfg");
    std::fs::create_dir_all(&out).unwrap();
    let text = thickness_lab::config::preset_text("film-k0").unwrap().replace("a = 1e-4, 1e-6", "a =");
    let path = out.join("empty-a.cfg");
    std::fs::write(&path, text).unwrap();
    let o = run(&["run", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    assert_eq!(run(&["run", "no-such-thing"], &out).status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
}

#[test]
fn sweep_on_flat_box() {
    let out = scratch("sweep");
    let o = run(&["sweep", "flat-box", "--quick"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let errs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    assert!(rows.iter().all(|r| r[3] != "n/a" && r[4] == "ok"));
}

#[test]
fn sweep_flags_under_resolved_rows() {
    let out = scratch("floor");
    std::fs::create_dir_all(&out).unwrap();
    let text = thickness_lab::config::preset_text("flat-box")
        .unwrap()
        .replace("a = 1e-2, 1e-3, 1e-4", "a = 1e-2, 1e-3, 1e-6");
    let path = out.join("floor.cfg");
    std::fs::write(&path, text).unwrap();
    let o = run(&["sweep", path.to_str().unwrap(), "--quick"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(table.lines().last().unwrap().ends_with(",under-resolved"));
}

#[test]
fn export_mesh_writes_text_and_matrix_market() {
    let out = scratch("export");
    let o = run(&["export-mesh", "film-k1", "--quick"], &out);
    assert!(o.status.success());
    let mesh = std::fs::read_to_string(out.join("mesh.txt")).unwrap();
    assert!(mesh.starts_with("nodes 28832 triangles 57600\n"));
    let mtx = std::fs::read_to_string(out.join("matrix_1e-4.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
}

#[test]
fn check_battery_passes() {
    let out = scratch("check");
    let o = run(&["check", "--quick", "--seed", "5"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report = std::fs::read_to_string(out.join("checks.jsonl")).unwrap();
    for line in report.lines() {
        let rec: thickness_core::verify::CheckRecord = serde_json::from_str(line).unwrap();
        assert!(rec.passed || !rec.gated, "{}", rec.case);
    }
}

#[test]
fn loose_cg_tolerance_is_visible_in_margins() {
    let (tight, loose) = (scratch("tight"), scratch("loose"));
    assert!(run(&["check", "--quick"], &tight).status.success());
    let o = run(&["check", "--quick", "--cg-tol", "1e-3"], &loose);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let read = |dir: &Path| -> Vec<thickness_core::verify::CheckRecord> {
        std::fs::read_to_string(dir.join("checks.jsonl"))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    };
    let (a, b) = (read(&tight), read(&loose));
    assert_eq!(a.len(), b.len());
    let pick = |recs: &[thickness_core::verify::CheckRecord]| {
        recs.iter().find(|r| r.case == "solver.relative_residual.film-k1").unwrap().lhs
    };
    assert!(pick(&b) > pick(&a));
}
