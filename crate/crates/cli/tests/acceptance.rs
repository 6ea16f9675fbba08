//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use thickness_core::exact1d::boundary_gap_constant;
use thickness_core::verify::CheckRecord;
use thickness_core::{assemble, solve, DomainSpec, Mesh, SolverOptions};
use thickness_lab::checks::{
    cutoff_check, envelope_check, flux_identity_check, gap_checks, homogeneous_checks, max_asymmetry, oracle_study,
    preset_mesh, ORACLE_RATIO,
};
use thickness_lab::experiment::{monotone_above_floor, solve_case};
use thickness_lab::ExperimentConfig;

const SEED: u64 = 20240601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn criterion(n: usize, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = out.passed && in_time;
    println!(
        "criterion {n} [{name}]: {} ({}; {:.2?} of {:.0?}{})",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed,
        budget,
        if in_time { "" } else { ", over budget" }
    );
    passed
}

fn worst(records: &[CheckRecord]) -> f64 {
    records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
}

fn seeded_records(solver: &SolverOptions) -> Vec<CheckRecord> {
    let flat = DomainSpec::wavy_film(0.0).unwrap();
    let flat_mesh = Mesh::build(&flat, 8, 300).unwrap();
    let (wavy, wavy_mesh) = preset_mesh(1.0, true).unwrap();
    let mut out = Vec::new();
    for a in [1e-2, 1e-4] {
        let seeds = SEED..SEED + 20;
        out.extend(homogeneous_checks(&format!("flat.a{a:e}"), &flat, &flat_mesh, a, seeds.clone(), solver).unwrap());
        out.extend(homogeneous_checks(&format!("k1.a{a:e}"), &wavy, &wavy_mesh, a, seeds, solver).unwrap());
    }
    out
}

fn main() {
    let solver = SolverOptions::default();
    let mut results = Vec::new();

    results.push(criterion(1, "1D flux identities", Duration::from_secs(1), || {
        let r = flux_identity_check(SEED, 100).unwrap();
        outcome(r.passed, format!("worst deviation {:.2e} vs {:.0e}", r.lhs, r.rhs))
    }));

    results.push(criterion(2, "1D thickness envelope", Duration::from_secs(1), || {
        let r = envelope_check(SEED, 100, 20).unwrap();
        outcome(r.passed, format!("max (h-T)/envelope {:.4} over 100 geometries x 20 coefficients", r.lhs))
    }));

    results.push(criterion(3, "FEM vs 1D oracle", Duration::from_secs(30), || {
        let spec = DomainSpec::flat(0.0, 1.0, 0.4, 0.6).unwrap();
        let study = oracle_study(&spec, 1e-4, &[256, 512, 1024], &solver).unwrap();
        let ratio = study.min_ratio();
        outcome(
            ratio >= ORACLE_RATIO && study.h_rel_error < 1e-2,
            format!(
                "sup errors {:.3e} / {:.3e} / {:.3e}, min ratio {ratio:.2}, h error {:.2e} at ny=1024",
                study.sup_errors[0], study.sup_errors[1], study.sup_errors[2], study.h_rel_error
            ),
        )
    }));

    results.push(criterion(4, "band fraction on presets", Duration::from_secs(300), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for name in ["film-k0", "film-k1", "film-k2"] {
            let config = ExperimentConfig::load(name).unwrap();
            let (nx, ny) = config.resolution(true);
            let mesh = Mesh::build(&config.spec, nx, ny).unwrap();
            let (r, _, _) = solve_case(&config.spec, &mesh, 1e-4, config.band, &solver).unwrap();
            let bound_ok = (r.r > 0.0) == r.theorem_bound.is_some();
            ok &= r.band_fraction > 0.95 && bound_ok;
            parts.push(format!("{name} {:.4}", r.band_fraction));
        }
        outcome(ok, parts.join(", "))
    }));

    results.push(criterion(5, "film theorem bound", Duration::from_secs(600), || {
        let (spec, mesh) = preset_mesh(0.0, false).unwrap();
        let rows: Vec<_> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&a| solve_case(&spec, &mesh, a, (0.3, 0.7), &solver).unwrap().0)
            .collect();
        let last = &rows[2];
        let bound = last.theorem_bound.unwrap();
        let within = last.l2_inv_error <= bound * 1.1;
        let monotone = monotone_above_floor(&rows) == Some(true) && rows.iter().all(|r| !r.under_resolved);
        let errs: Vec<String> = rows.iter().map(|r| format!("{:.4e}", r.l2_inv_error)).collect();
        outcome(
            within && monotone,
            format!("l2 {:.4e} vs bound {bound:.4e} at a=1e-4 (nx=4, ny=9000); sweep {}", last.l2_inv_error, errs.join(" > ")),
        )
    }));

    let seeded = seeded_records(&solver);

    results.push(criterion(6, "maximum modulus", Duration::from_secs(300), || {
        let modulus: Vec<CheckRecord> = seeded.iter().filter(|r| r.case.starts_with("verify.max_modulus")).cloned().collect();
        let mut ok = modulus.iter().all(|r| r.passed);
        let mut detail = format!("{} seeded solutions, worst slack {:.3e}", modulus.len(), worst(&modulus));
        for (label, k, quick) in [("film-k0", 0.0, false), ("film-k0.2", 0.2, true)] {
            let (spec, mesh) = if k == 0.0 {
                preset_mesh(0.0, quick).unwrap()
            } else {
                let spec = DomainSpec::wavy_film(k).unwrap();
                let mesh = Mesh::build(&spec, 32, 900).unwrap();
                (spec, mesh)
            };
            let recs = gap_checks(label, &spec, &mesh, 1e-4, &solver).unwrap();
            let gated = recs.iter().find(|r| r.case.starts_with("verify.gap_sup.")).unwrap();
            let nodal = recs.iter().find(|r| r.case.starts_with("verify.gap_sup_nodal_fem")).unwrap();
            let ca = boundary_gap_constant(&spec, 1e-4).unwrap().unwrap();
            ok &= gated.passed;
            detail.push_str(&format!(
                "; {label}: gap sup {:.2e} <= C_a {ca:.2e} (recorded only: nodal FEM gap {:.2e})",
                gated.lhs, nodal.lhs
            ));
        }
        outcome(ok, detail)
    }));

    results.push(criterion(7, "interior H1 and cutoff", Duration::from_secs(120), || {
        let h1: Vec<CheckRecord> = seeded.iter().filter(|r| r.case.starts_with("verify.interior_h1")).cloned().collect();
        let spec = DomainSpec::wavy_film(0.0).unwrap();
        let l = spec.derive_constants().unwrap().m;
        let cutoff = cutoff_check(spec.film_lo, spec.film_hi, l, 10_000).unwrap();
        let max_ratio = h1.iter().map(|r| if r.rhs > 0.0 { r.lhs / r.rhs } else { 0.0 }).fold(0.0, f64::max);
        outcome(
            h1.iter().all(|r| r.passed) && cutoff.passed,
            format!(
                "{} solutions, max lhs/rhs {max_ratio:.3e}; max |c''| {:.4} vs 4/l^2 {:.4}",
                h1.len(),
                cutoff.lhs,
                cutoff.rhs
            ),
        )
    }));

    results.push(criterion(8, "structural", Duration::from_secs(60), || {
        let mut ok = true;
        let (mut asym, mut x_sum, mut sx_norm) = (0.0f64, 0.0f64, 0.0f64);
        for name in ["film-k0", "film-k1", "film-k2"] {
            let config = ExperimentConfig::load(name).unwrap();
            let (nx, ny) = config.resolution(true);
            let mesh = Mesh::build(&config.spec, nx, ny).unwrap();
            for &a in &config.a_list {
                let (sys_x, sys_y) = assemble(&mesh, a).unwrap();
                asym = asym.max(max_asymmetry(sys_y.matrix()));
                ok &= sys_y.matrix().is_symmetric();
                x_sum = x_sum.max(sys_x.nodal_rhs().iter().sum::<f64>().abs());
                let (sx, rep) = solve(&sys_x, &solver).unwrap();
                ok &= rep.converged;
                sx_norm = sx_norm.max(sx.l2_norm());
            }
        }
        ok &= asym == 0.0 && x_sum <= 1e-12 && sx_norm <= 10.0 * solver.tol;
        outcome(ok, format!("max |A-A^T| {asym:e}, |sum rhs_x| {x_sum:.2e}, max |s^x| {sx_norm:.2e}"))
    }));

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
