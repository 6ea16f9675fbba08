//! The check battery behind the `check` verb. Every check is phrased as `lhs ≤ rhs`, and
//! `margin = rhs − lhs` is the recorded slack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thickness_core::assembly::{CsrMatrix, SparseSystem};
use thickness_core::exact1d::{boundary_gap_constant, thickness_bound_1d, Side};
use thickness_core::solver::energy_identity_gap;
use thickness_core::verify::{
    check_interior_h1, check_max_modulus, gap_readings, gap_trace, nodal_gap, seeded_boundary_trace,
    solve_homogeneous, CheckRecord, CutoffProfile, H1Report, PrincipleTolerance,
};
use thickness_core::{assemble, solve, solve_exact, DomainSpec, Field, Interval1DProblem, Mesh, SolverOptions};

use crate::error::{CliError, Result};

/// Relative allowance for discrete maximum-principle violations.
pub const MODULUS_TOL: f64 = 1e-2;
pub const FLUX_TOL: f64 = 1e-10;
pub const X_RHS_TOL: f64 = 1e-12;
pub const ENERGY_TOL: f64 = 1e-6;
pub const ORACLE_RATIO: f64 = 3.5;

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    pub cg_tol: f64,
    /// Random boundary traces per domain in the maximum-modulus and interior-H¹ families.
    pub traces: usize,
    pub quick: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { seed: 0, cg_tol: SolverOptions::default().tol, traces: 20, quick: false }
    }
}

impl CheckOptions {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions::with_tol(self.cg_tol)
    }
}

fn le(case: impl Into<String>, lhs: f64, rhs: f64) -> CheckRecord {
    CheckRecord::new(case, lhs, rhs, rhs - lhs, lhs <= rhs)
}

/// Random slab geometries: lower wall in `(−1, 1)`, void gaps drawn from `gaps`,
/// thickness in `(0.05, 1)`.
pub fn random_geometries(seed: u64, count: usize, gaps: (f64, f64)) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let b_l = rng.gen_range(-1.0..1.0);
            let f_l = b_l + rng.gen_range(gaps.0..gaps.1);
            let f_r = f_l + rng.gen_range(0.05..1.0);
            let b_r = f_r + rng.gen_range(gaps.0..gaps.1);
            [b_l, b_r, f_l, f_r]
        })
        .collect()
}

/// `a` log-uniform in `[10⁻⁸, 1]`.
pub fn random_coefficient(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-8.0..=0.0))
}

/// `a·s* − a·s'(f_l − 0) = 1` and `a·s* − a·s'(f_r + 0) = 1`; `lhs` is the worst deviation.
pub fn flux_identity_check(seed: u64, count: usize) -> Result<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1u64);
    let mut worst = 0.0f64;
    for [b_l, b_r, f_l, f_r] in random_geometries(seed, count, (0.01, 2.0)) {
        let a = random_coefficient(&mut rng);
        let p = Interval1DProblem::new(b_l, b_r, f_l, f_r, a)?;
        let s = solve_exact(&p)?;
        let lo = a * s.slope - a * s.derivative(&p, f_l, Side::Below);
        let hi = a * s.slope - a * s.derivative(&p, f_r, Side::Above);
        worst = worst.max((lo - 1.0).abs()).max((hi - 1.0).abs());
    }
    Ok(le("exact1d.flux_identities", worst, FLUX_TOL))
}

/// Log-spaced coefficients `10⁻⁸ … 1`.
pub fn coefficient_sweep(points: usize) -> Vec<f64> {
    (0..points).map(|i| 10f64.powf(-8.0 + 8.0 * i as f64 / (points - 1) as f64)).collect()
}

/// `0 ≤ h − T ≤ 2√a + 4T e^{−2m/√a}` over a sweep; `lhs` is the largest `excess / upper`.
///
/// Gaps are drawn from `[0.5, 2]` so that `m/√a ≥ 0.5` throughout the sweep.
pub fn envelope_check(seed: u64, count: usize, points: usize) -> Result<CheckRecord> {
    let mut worst = 0.0f64;
    let mut negative = false;
    for [b_l, b_r, f_l, f_r] in random_geometries(seed, count, (0.5, 2.0)) {
        for a in coefficient_sweep(points) {
            let p = Interval1DProblem::new(b_l, b_r, f_l, f_r, a)?;
            let s = solve_exact(&p)?;
            let env = thickness_bound_1d(&p);
            negative |= s.excess < env.lower;
            worst = worst.max(s.excess / env.upper);
        }
    }
    let mut rec = le("exact1d.envelope", worst, 1.0);
    rec.passed &= !negative;
    Ok(rec)
}

pub fn max_asymmetry(m: &CsrMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.n() {
        for (c, v) in m.row(r) {
            worst = worst.max((v - m.get(c, r)).abs());
        }
    }
    worst
}

/// Energy identity `uᵀAu = uᵀb` after a solve; a failed solve counts as a violation.
pub fn energy_identity_check(label: &str, system: &SparseSystem<'_, f64>, options: &SolverOptions) -> Result<CheckRecord> {
    let (u, report) = solve(system, options)?;
    let gap = if report.converged { energy_identity_gap(system, &u) } else { f64::INFINITY };
    Ok(le(format!("solver.energy_identity.{label}"), gap, ENERGY_TOL))
}

/// Symmetry, zero x-load, energy identity and `s^x = 0` for one spec at one coefficient.
pub fn structural_checks(label: &str, spec: &DomainSpec<f64>, nx: usize, ny: usize, a: f64, options: &SolverOptions) -> Result<Vec<CheckRecord>> {
    let mesh = Mesh::build(spec, nx, ny)?;
    let (sys_x, sys_y) = assemble(&mesh, a)?;
    let x_sum: f64 = sys_x.nodal_rhs().iter().sum();
    let (sx, rx) = solve(&sys_x, options)?;
    let sx_norm = if rx.converged { sx.l2_norm() } else { f64::INFINITY };
    let asym = max_asymmetry(sys_y.matrix());
    let mut out = vec![
        CheckRecord::new(format!("assembly.symmetry.{label}"), asym, 0.0, -asym, asym == 0.0 && sys_y.matrix().is_symmetric()),
        le(format!("assembly.x_rhs_sum.{label}"), x_sum.abs(), X_RHS_TOL),
        le(format!("solver.sx_norm.{label}"), sx_norm, 10.0 * options.tol),
    ];
    out.push(energy_identity_check(label, &sys_y, options)?);
    let (_, ry) = solve(&sys_y, options)?;
    out.push(le(format!("solver.relative_residual.{label}"), ry.relative_residual, options.tol));
    Ok(out)
}

/// Nodal sup error of `s^y` against the closed form on a quasi-1D box and per-triangle
/// thickness error at the finest mesh.
#[derive(Clone, Debug)]
pub struct OracleStudy {
    pub ny: Vec<usize>,
    pub sup_errors: Vec<f64>,
    pub h_rel_error: f64,
}

impl OracleStudy {
    pub fn min_ratio(&self) -> f64 {
        self.sup_errors.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min)
    }
}

pub fn oracle_study(spec: &DomainSpec<f64>, a: f64, nys: &[usize], options: &SolverOptions) -> Result<OracleStudy> {
    let mut sup_errors = Vec::with_capacity(nys.len());
    let mut h_rel_error = f64::NAN;
    let (p, exact) = thickness_core::exact1d::reference_film_solution(spec, a)?;
    for &ny in nys {
        let mesh = Mesh::build(spec, 4, ny)?;
        let (_, tf, sy) = crate::experiment::solve_case(spec, &mesh, a, (0.0, f64::INFINITY), options)?;
        let sup = mesh
            .nodes()
            .iter()
            .zip(sy.values())
            .map(|(&[_, y], &v)| (v - exact.eval(&p, y)).abs())
            .fold(0.0, f64::max);
        sup_errors.push(sup);
        h_rel_error = tf
            .h
            .iter()
            .map(|h| h.map_or(f64::INFINITY, |h| (h - exact.h).abs() / exact.h))
            .fold(0.0, f64::max);
    }
    Ok(OracleStudy { ny: nys.to_vec(), sup_errors, h_rel_error })
}

/// Maximum modulus (scalar and two-component) and interior H¹ for random boundary traces.
pub fn homogeneous_checks(
    label: &str,
    spec: &DomainSpec<f64>,
    mesh: &Mesh<f64>,
    a: f64,
    seeds: impl IntoIterator<Item = u64>,
    options: &SolverOptions,
) -> Result<Vec<CheckRecord>> {
    let tol = PrincipleTolerance { rel: MODULUS_TOL, abs: 0.0 };
    let mut out = Vec::new();
    for seed in seeds {
        let (d1, r1) = solve_homogeneous(mesh, a, &seeded_boundary_trace(mesh, seed, -1.0, 1.0), options)?;
        let (d2, r2) = solve_homogeneous(mesh, a, &seeded_boundary_trace(mesh, seed ^ (1 << 40), -1.0, 1.0), options)?;
        if !(r1.converged && r2.converged) {
            return Err(CliError::Solver(format!("homogeneous solve for seed {seed} on {label} did not converge")));
        }
        for (kind, fields) in [("scalar", vec![&d1]), ("vector", vec![&d1, &d2])] {
            let rep = check_max_modulus(&fields, tol)?;
            let rhs = rep.boundary_sup * (1.0 + MODULUS_TOL);
            out.push(CheckRecord::new(
                format!("verify.max_modulus.{label}.{kind}.seed{seed}"),
                rep.interior_sup,
                rhs,
                rhs - rep.interior_sup,
                rep.passed,
            ));
            let h1 = check_interior_h1(&fields, spec, H1Report::DEFAULT_TOL)?;
            out.push(CheckRecord::new(
                format!("verify.interior_h1.{label}.{kind}.seed{seed}"),
                h1.lhs,
                h1.rhs,
                h1.slack,
                h1.passed,
            ));
        }
    }
    Ok(out)
}

/// The gap `d = s − s̄` as the discrete homogeneous solution carrying the boundary trace
/// `−s̄|∂D`; gated against `C_a (1 + 10⁻²)`. The raw nodal difference between the FEM
/// solution and the closed form is recorded alongside, together with both readings of the
/// film estimate.
pub fn gap_checks(label: &str, spec: &DomainSpec<f64>, mesh: &Mesh<f64>, a: f64, options: &SolverOptions) -> Result<Vec<CheckRecord>> {
    let c_a = boundary_gap_constant(spec, a)?
        .ok_or_else(|| CliError::Config(format!("{label}: the boundary gap estimate needs R > 0")))?;
    let trace = gap_trace(mesh, spec, a)?;
    let (d, report) = solve_homogeneous(mesh, a, &trace, options)?;
    if !report.converged {
        return Err(CliError::Solver(format!("gap solve on {label} did not converge")));
    }
    let interior = (0..mesh.node_count())
        .filter(|&n| !mesh.is_dirichlet(n))
        .map(|n| d.values()[n].abs())
        .fold(0.0, f64::max);
    let mut out = vec![le(format!("verify.gap_sup.{label}"), interior, c_a * (1.0 + MODULUS_TOL))];

    let (sys_x, sys_y) = assemble(mesh, a)?;
    let (_, rx) = solve(&sys_x, options)?;
    let (sy, ry) = solve(&sys_y, options)?;
    if !(rx.converged && ry.converged) {
        return Err(CliError::Solver(format!("film solve on {label} did not converge")));
    }
    let raw = nodal_gap(&sy, spec, a)?;
    out.push(le(format!("verify.gap_sup_nodal_fem.{label}"), raw.max_abs(), c_a * (1.0 + MODULUS_TOL)).recorded());
    out.extend(readings(&format!("{label}.discrete"), &[&d], spec, a)?);
    out.extend(readings(&format!("{label}.nodal_fem"), &[&raw], spec, a)?);
    Ok(out)
}

fn readings(label: &str, fields: &[&Field<'_, f64>], spec: &DomainSpec<f64>, a: f64) -> Result<Vec<CheckRecord>> {
    let r = gap_readings(fields, spec, a)?;
    let m = r.m;
    let e = r.energy;
    let mut out = vec![le(format!("verify.reading.grad_vs_lemma.{label}"), e.film_grad_sq, 2.0 / (m * m) * e.void_sq).recorded()];
    if let Some(ca) = r.c_a {
        let four = 4.0 / m * ca * ca;
        let lemma = 2.0 / (m * m) * e.void_area * ca * ca;
        out.push(le(format!("verify.reading.grad_vs_4_over_m.{label}"), e.film_grad_sq, four).recorded());
        out.push(le(format!("verify.reading.value_vs_4_over_m.{label}"), e.film_sq, four).recorded());
        out.push(le(format!("verify.reading.grad_vs_2_over_m2.{label}"), e.film_grad_sq, lemma).recorded());
        out.push(le(format!("verify.reading.value_vs_2_over_m2.{label}"), e.film_sq, lemma).recorded());
    }
    Ok(out)
}

/// `|c''| ≤ 4/l²` on `samples` equispaced points covering the cutoff's support.
pub fn cutoff_check(f_l: f64, f_r: f64, l: f64, samples: usize) -> Result<CheckRecord> {
    let c = CutoffProfile::new(f_l, f_r, l)?;
    let (lo, hi) = (f_l - 1.5 * l, f_r + 1.5 * l);
    let worst = (0..samples)
        .map(|i| c.eval(lo + (hi - lo) * i as f64 / (samples - 1) as f64).1.abs())
        .fold(0.0, f64::max);
    Ok(le("verify.cutoff_curvature", worst, c.curvature_bound()))
}

/// Film preset with `b_r = 3 − k sin²(πx)` and its quick or CI resolution.
pub fn preset_mesh(k: f64, quick: bool) -> Result<(DomainSpec<f64>, Mesh<f64>)> {
    let spec = DomainSpec::wavy_film(k)?;
    let (nx, ny) = match (k == 0.0, quick) {
        (true, true) => (4, 900),
        (true, false) => (4, 9000),
        (false, true) => (32, 900),
        (false, false) => (64, 1800),
    };
    let mesh = Mesh::build(&spec, nx, ny)?;
    Ok((spec, mesh))
}

pub fn run_checks(opts: &CheckOptions) -> Result<Vec<CheckRecord>> {
    let solver = opts.solver();
    let mut records = vec![
        flux_identity_check(opts.seed, 100)?,
        envelope_check(opts.seed, 100, 20)?,
    ];
    let structural = if opts.quick { (32, 900) } else { (64, 1800) };
    for k in [0.0, 1.0, 2.0] {
        let spec = DomainSpec::wavy_film(k)?;
        records.extend(structural_checks(&format!("film-k{k}"), &spec, structural.0, structural.1, 1e-4, &solver)?);
    }

    let box_spec = DomainSpec::flat(0.0, 1.0, 0.4, 0.6)?;
    let study = oracle_study(&box_spec, 1e-4, &[256, 512, 1024], &solver)?;
    records.push(le("fem.oracle_ratio", ORACLE_RATIO, study.min_ratio()));
    records.push(le("fem.oracle_h_rel", study.h_rel_error, 1e-2));

    let seeds = (0..opts.traces as u64).map(|i| opts.seed.wrapping_add(i));
    let flat = DomainSpec::wavy_film(0.0)?;
    records.extend(homogeneous_checks("flat", &flat, &Mesh::build(&flat, 8, 300)?, 1e-3, seeds.clone(), &solver)?);
    let (wavy, wavy_mesh) = preset_mesh(1.0, true)?;
    records.extend(homogeneous_checks("k1", &wavy, &wavy_mesh, 1e-3, seeds, &solver)?);

    let (k0, k0_mesh) = preset_mesh(0.0, opts.quick)?;
    records.extend(gap_checks("film-k0", &k0, &k0_mesh, 1e-4, &solver)?);
    let shallow = DomainSpec::wavy_film(0.2)?;
    let shallow_mesh = Mesh::build(&shallow, 32, 900)?;
    records.extend(gap_checks("film-k0.2", &shallow, &shallow_mesh, 1e-4, &solver)?);

    let m = k0.derive_constants()?.m;
    records.push(cutoff_check(k0.film_lo, k0.film_hi, m, 10_000)?);
    Ok(records)
}

pub fn failures(records: &[CheckRecord]) -> Vec<&CheckRecord> {
    records.iter().filter(|r| r.gated && !r.passed).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use thickness_core::assembly::{assemble_operator, AssemblyOptions, OperatorCoefficients};

    #[test]
    fn one_dimensional_families_pass() {
        assert!(flux_identity_check(7, 100).unwrap().passed);
        assert!(envelope_check(7, 20, 20).unwrap().passed);
        assert_eq!(coefficient_sweep(20).len(), 20);
        assert_eq!(coefficient_sweep(20)[19], 1.0);
    }

    #[test]
    fn tampered_stiffness_fails_energy_identity() {
        let spec = DomainSpec::flat(0.0, 1.0, 0.4, 0.6).unwrap();
        let mesh = Mesh::build(&spec, 4, 64).unwrap();
        let coeffs = OperatorCoefficients { diffusion: -1e-2, reaction: 1.0 };
        let (_, sy) = assemble_operator(&mesh, coeffs, AssemblyOptions::default()).unwrap();
        let rec = energy_identity_check("tampered", &sy, &SolverOptions::default()).unwrap();
        assert!(!rec.passed);
        let (_, good) = assemble(&mesh, 1e-2).unwrap();
        assert!(energy_identity_check("good", &good, &SolverOptions::default()).unwrap().passed);
    }

    #[test]
    fn cutoff_passes() {
        assert!(cutoff_check(0.5, 0.99, 0.5, 10_000).unwrap().passed);
    }

    #[test]
    fn failures_ignore_recorded_checks() {
        let recs = vec![le("a", 2.0, 1.0).recorded(), le("b", 0.0, 1.0), le("c", 3.0, 1.0)];
        let f = failures(&recs);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].case, "c");
    }
}
