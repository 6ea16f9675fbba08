//! Numerical checks of the structural estimates for homogeneous solutions `d`
//! (`a ∫∇d·∇u + ∫_{D∖Ω} d u = 0`, arbitrary boundary trace):
//!
//! * maximum modulus: `sup_D |d| ≤ sup_∂D |d|` (scalar and vector-valued `d`);
//! * interior H¹: `∫_Ω |∇d|² ≤ 2/l² ∫_{D∖Ω} |d|²` with `l = min{b_r^min − f_r, f_l − b_l^max}`.
//!
//! Discrete P1 solutions need not satisfy these exactly, so every check reports the size of
//! the violation alongside the verdict.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::assemble_homogeneous;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::exact1d::{boundary_gap_constant, reference_film_solution};
use crate::mesh::{Mesh, Region};
use crate::scalar::{pairwise_sum, Scalar};
use crate::solver::{solve, Field, SolveReport, SolverOptions};

/// `C^{1,1}` cutoff equal to one on `[f_l, f_r]` and zero outside `(f_l − l, f_r + l)`,
/// built from quadratic blends of width `l` on each side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile<T> {
    pub f_l: T,
    pub f_r: T,
    pub l: T,
}

impl<T: Scalar> CutoffProfile<T> {
    pub fn new(f_l: T, f_r: T, l: T) -> Result<Self> {
        if !(l > T::zero()) || !(f_l < f_r) {
            return Err(Error::InvalidArgument(format!("cutoff needs l > 0 and f_l < f_r, got l = {l}")));
        }
        Ok(Self { f_l, f_r, l })
    }

    /// `4/l²`, the bound on `|c''|`.
    pub fn curvature_bound(&self) -> T {
        T::lit(4.0) / (self.l * self.l)
    }

    /// `(c(y), c''(y))`.
    pub fn eval(&self, y: T) -> (T, T) {
        if y >= self.f_l && y <= self.f_r {
            return (T::one(), T::zero());
        }
        // distance travelled into the blend from its outer edge
        let x = if y < self.f_l { y - (self.f_l - self.l) } else { (self.f_r + self.l) - y };
        let l = self.l;
        let two = T::lit(2.0);
        let l2 = l * l;
        if x <= T::zero() {
            (T::zero(), T::zero())
        } else if x <= l / two {
            (two * x * x / l2, self.curvature_bound())
        } else if x < l {
            let r = l - x;
            (T::one() - two * r * r / l2, -self.curvature_bound())
        } else {
            (T::one(), T::zero())
        }
    }
}

pub fn cutoff_eval<T: Scalar>(profile: &CutoffProfile<T>, y: T) -> (T, T) {
    profile.eval(y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipleTolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for PrincipleTolerance {
    fn default() -> Self {
        Self { rel: 1e-8, abs: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipleReport {
    pub interior_sup: f64,
    pub boundary_sup: f64,
    /// `interior_sup − boundary_sup`; positive values are violations.
    pub margin: f64,
    pub passed: bool,
    /// Scalar fields only: `min(0, min_∂D d) ≤ d ≤ max(0, max_∂D d)` within tolerance.
    pub signed_bounds_hold: Option<bool>,
}

fn common_mesh<'m, T: Scalar>(fields: &[&Field<'m, T>]) -> Result<&'m Mesh<T>> {
    let first = fields.first().ok_or_else(|| Error::InvalidArgument("no fields given".into()))?;
    if fields.iter().any(|f| !f.same_mesh(first)) {
        return Err(Error::MeshMismatch);
    }
    Ok(first.mesh())
}

/// Maximum modulus check; one field is the scalar case, several fields are the components
/// of a vector-valued `d` compared through per-node Euclidean norms.
pub fn check_max_modulus<T: Scalar>(fields: &[&Field<'_, T>], tol: PrincipleTolerance) -> Result<PrincipleReport> {
    let mesh = common_mesh(fields)?;
    let modulus = |n: usize| -> f64 {
        fields.iter().map(|f| f.values()[n].to_f64_lossy().powi(2)).sum::<f64>().sqrt()
    };
    let (mut interior, mut boundary) = (0.0f64, 0.0f64);
    for n in 0..mesh.node_count() {
        let m = modulus(n);
        if mesh.is_dirichlet(n) {
            boundary = boundary.max(m);
        } else {
            interior = interior.max(m);
        }
    }
    let allowance = boundary * tol.rel + tol.abs;
    let signed_bounds_hold = (fields.len() == 1).then(|| {
        let values = fields[0].values();
        let (mut b_hi, mut b_lo) = (0.0f64, 0.0f64);
        let (mut i_hi, mut i_lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for (n, v) in values.iter().enumerate() {
            let v = v.to_f64_lossy();
            if mesh.is_dirichlet(n) {
                b_hi = b_hi.max(v);
                b_lo = b_lo.min(v);
            } else {
                i_hi = i_hi.max(v);
                i_lo = i_lo.min(v);
            }
        }
        i_hi <= b_hi + allowance && i_lo >= b_lo - allowance
    });
    Ok(PrincipleReport {
        interior_sup: interior,
        boundary_sup: boundary,
        margin: interior - boundary,
        passed: interior <= boundary + allowance,
        signed_bounds_hold,
    })
}

/// Film gradient energy and void mass of a (possibly vector-valued) nodal field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySplit {
    /// `∫_Ω |∇d|²`.
    pub film_grad_sq: f64,
    /// `∫_Ω |d|²` (consistent-mass quadrature).
    pub film_sq: f64,
    /// `∫_{D∖Ω} |d|²` (consistent-mass quadrature).
    pub void_sq: f64,
    pub void_area: f64,
}

pub fn energy_split<T: Scalar>(fields: &[&Field<'_, T>]) -> Result<EnergySplit> {
    let mesh = common_mesh(fields)?;
    let mut grad_terms = Vec::new();
    let mut film_terms = Vec::new();
    let mut void_terms = Vec::new();
    let mut void_areas = Vec::new();
    for t in 0..mesh.triangle_count() {
        let area = mesh.geometry(t).area.to_f64_lossy();
        let tri = mesh.triangles()[t];
        // ∫_T u² for linear u: area/12 · (Σ u_i² + (Σ u_i)²)
        let mass: f64 = fields
            .iter()
            .map(|f| {
                let v = tri.map(|n| f.values()[n].to_f64_lossy());
                let sum = v[0] + v[1] + v[2];
                area / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + sum * sum)
            })
            .sum();
        match mesh.locate_region(t) {
            Region::Film => {
                let g: f64 = fields
                    .iter()
                    .map(|f| {
                        let [gx, gy] = f.gradient(t);
                        gx.to_f64_lossy().powi(2) + gy.to_f64_lossy().powi(2)
                    })
                    .sum();
                grad_terms.push(area * g);
                film_terms.push(mass);
            }
            Region::Void => {
                void_terms.push(mass);
                void_areas.push(area);
            }
        }
    }
    Ok(EnergySplit {
        film_grad_sq: pairwise_sum(&grad_terms),
        film_sq: pairwise_sum(&film_terms),
        void_sq: pairwise_sum(&void_terms),
        void_area: pairwise_sum(&void_areas),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H1Report {
    /// `∫_Ω |∇d|²`.
    pub lhs: f64,
    /// `2/l_max² ∫_{D∖Ω} |d|²`.
    pub rhs: f64,
    pub l_max: f64,
    /// `rhs − lhs`; negative values are violations.
    pub slack: f64,
    pub passed: bool,
}

impl H1Report {
    pub const DEFAULT_TOL: f64 = 1e-6;
}

pub fn check_interior_h1<T: Scalar>(fields: &[&Field<'_, T>], spec: &DomainSpec<T>, tol: f64) -> Result<H1Report> {
    let c = spec.derive_constants()?;
    let l_max = c.m.to_f64_lossy();
    if !(l_max > 0.0) {
        return Err(Error::InvalidDomain(format!("interior estimate needs a positive inner gap, got {l_max}")));
    }
    let e = energy_split(fields)?;
    let rhs = 2.0 / (l_max * l_max) * e.void_sq;
    let lhs = e.film_grad_sq;
    Ok(H1Report { lhs, rhs, l_max, slack: rhs - lhs, passed: lhs <= rhs * (1.0 + tol) })
}

/// Side-by-side evaluation of the two possible readings of the film estimate for the gap
/// `d = s − s̄`: gradient versus value on the left, `4/m` versus `2/m²` constants on the right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReadings {
    pub energy: EnergySplit,
    pub c_a: Option<f64>,
    pub m: f64,
    /// `∫_Ω|∇d|² ≤ 2/m² ∫_{D∖Ω} d²`
    pub grad_vs_lemma: bool,
    /// `∫_Ω|∇d|² ≤ 4/m · C_a²`
    pub grad_vs_four_over_m: Option<bool>,
    /// `∫_Ω d² ≤ 4/m · C_a²`
    pub value_vs_four_over_m: Option<bool>,
    /// `∫_Ω|∇d|² ≤ 2/m² · |D∖Ω| · C_a²`
    pub grad_vs_lemma_sup: Option<bool>,
    /// `∫_Ω d² ≤ 2/m² · |D∖Ω| · C_a²`
    pub value_vs_lemma_sup: Option<bool>,
}

pub fn gap_readings<T: Scalar>(fields: &[&Field<'_, T>], spec: &DomainSpec<T>, a: T) -> Result<GapReadings> {
    let c = spec.derive_constants()?;
    let m = c.m.to_f64_lossy();
    let energy = energy_split(fields)?;
    let c_a = boundary_gap_constant(spec, a)?.map(Scalar::to_f64_lossy);
    let four = c_a.map(|ca| 4.0 / m * ca * ca);
    let lemma_sup = c_a.map(|ca| 2.0 / (m * m) * energy.void_area * ca * ca);
    Ok(GapReadings {
        energy,
        c_a,
        m,
        grad_vs_lemma: energy.film_grad_sq <= 2.0 / (m * m) * energy.void_sq,
        grad_vs_four_over_m: four.map(|b| energy.film_grad_sq <= b),
        value_vs_four_over_m: four.map(|b| energy.film_sq <= b),
        grad_vs_lemma_sup: lemma_sup.map(|b| energy.film_grad_sq <= b),
        value_vs_lemma_sup: lemma_sup.map(|b| energy.film_sq <= b),
    })
}

/// Uniform random values in `[lo, hi]` on Dirichlet nodes, zero elsewhere.
pub fn seeded_boundary_trace<T: Scalar>(mesh: &Mesh<T>, seed: u64, lo: f64, hi: f64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..mesh.node_count())
        .map(|n| if mesh.is_dirichlet(n) { T::lit(rng.gen_range(lo..=hi)) } else { T::zero() })
        .collect()
}

/// Boundary trace of `s − s̄` where `s` vanishes on `∂D` and `s̄` is the analytic reference
/// solution on the circumscribing slab.
pub fn gap_trace<T: Scalar>(mesh: &Mesh<T>, spec: &DomainSpec<T>, a: T) -> Result<Vec<T>> {
    let (p, s) = reference_film_solution(spec, a)?;
    Ok(mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(n, &[_, y])| if mesh.is_dirichlet(n) { -s.eval(&p, y) } else { T::zero() })
        .collect())
}

/// `s − s̄` at every node, with `s̄` evaluated analytically.
pub fn nodal_gap<'m, T: Scalar>(s: &Field<'m, T>, spec: &DomainSpec<T>, a: T) -> Result<Field<'m, T>> {
    let (p, sol) = reference_film_solution(spec, a)?;
    let reference = Field::interpolate(s.mesh(), None, |_, y| sol.eval(&p, y))?;
    s.sub(&reference)
}

/// Solves the discrete homogeneous equation for the given nodal trace.
pub fn solve_homogeneous<'m, T: Scalar>(
    mesh: &'m Mesh<T>,
    a: T,
    trace: &[T],
    options: &SolverOptions,
) -> Result<(Field<'m, T>, SolveReport)> {
    let system = assemble_homogeneous(mesh, a, trace)?;
    solve(&system, options)
}

/// One line of the JSON-lines check report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
    /// Recorded-only checks do not affect the overall verdict.
    #[serde(default = "gated_default")]
    pub gated: bool,
}

fn gated_default() -> bool {
    true
}

impl CheckRecord {
    pub fn new(case: impl Into<String>, lhs: f64, rhs: f64, margin: f64, passed: bool) -> Self {
        Self { case: case.into(), lhs, rhs, margin, passed, gated: true }
    }

    pub fn recorded(mut self) -> Self {
        self.gated = false;
        self
    }
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[CheckRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn append_jsonl(path: &Path, records: &[CheckRecord]) -> Result<()> {
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    write_jsonl(std::io::BufWriter::new(file), records)
}
