//! Jacobi-preconditioned conjugate gradients on the reduced systems.

use crate::assembly::{Component, CsrMatrix, SparseSystem};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{dot, norm2, Scalar};

/// The recurred residual is replaced by `b − A x` this often.
const RESIDUAL_REFRESH: usize = 50;

/// Nodal values of one scalar unknown (a component of `s`, or a homogeneous solution).
#[derive(Clone, Debug)]
pub struct Field<'m, T> {
    mesh: &'m Mesh<T>,
    values: Vec<T>,
    component: Option<Component>,
}

impl<'m, T: Scalar> Field<'m, T> {
    pub fn new(mesh: &'m Mesh<T>, values: Vec<T>, component: Option<Component>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Self { mesh, values, component })
    }

    /// Nodal interpolant of `f(x, y)`.
    pub fn interpolate(mesh: &'m Mesh<T>, component: Option<Component>, f: impl Fn(T, T) -> T) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&[x, y]| f(x, y)).collect();
        Self::new(mesh, values, component)
    }

    pub fn zeros(mesh: &'m Mesh<T>, component: Option<Component>) -> Self {
        Self { mesh, values: vec![T::zero(); mesh.node_count()], component }
    }

    pub fn mesh(&self) -> &'m Mesh<T> {
        self.mesh
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn component(&self) -> Option<Component> {
        self.component
    }

    pub fn same_mesh(&self, other: &Field<'_, T>) -> bool {
        std::ptr::eq(self.mesh, other.mesh)
    }

    /// Constant gradient of the P1 interpolant on triangle `t`.
    pub fn gradient(&self, t: usize) -> [T; 2] {
        let g = self.mesh.geometry(t);
        let tri = self.mesh.triangles()[t];
        let mut out = [T::zero(); 2];
        for k in 0..3 {
            let v = self.values[tri[k]];
            out[0] = out[0] + v * g.grads[k][0];
            out[1] = out[1] + v * g.grads[k][1];
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> T {
        norm2(&self.values)
    }

    /// Pointwise difference; both fields must live on the same mesh.
    pub fn sub(&self, other: &Field<'_, T>) -> Result<Field<'m, T>> {
        if !self.same_mesh(other) {
            return Err(Error::MeshMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect();
        Ok(Field { mesh: self.mesh, values, component: self.component })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    /// Defaults to `20 n` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Solves the reduced system and re-expands onto all nodes with the Dirichlet values.
pub fn solve<'m, T: Scalar>(system: &SparseSystem<'m, T>, options: &SolverOptions) -> Result<(Field<'m, T>, SolveReport)> {
    let (u, report) = conjugate_gradient(system.matrix(), system.rhs(), options)?;
    let mut values = system.boundary_values().to_vec();
    for (d, v) in u.into_iter().enumerate() {
        values[system.dofs().node(d)] = v;
    }
    Ok((Field { mesh: system.mesh(), values, component: system.component() }, report))
}

/// Preconditioned CG from a zero initial guess.
pub fn conjugate_gradient<T: Scalar>(a: &CsrMatrix<T>, b: &[T], options: &SolverOptions) -> Result<(Vec<T>, SolveReport)> {
    if !(options.tol > 0.0 && options.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {}", options.tol)));
    }
    if b.len() != a.n() {
        return Err(Error::InvalidArgument("right-hand side length mismatch".into()));
    }
    let n = a.n();
    let max_iter = options.max_iter.unwrap_or(20 * n.max(1));
    let mut x = vec![T::zero(); n];
    let b_norm = norm2(b);
    if b_norm.is_zero() {
        return Ok((x, SolveReport { iterations: 0, relative_residual: 0.0, converged: true }));
    }
    let tol = T::lit(options.tol);
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d.is_zero() { T::one() } else { T::one() / d })
        .collect();

    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut rel;
    let mut iterations = 0;
    while iterations < max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) || !pap.is_finite() {
            // not positive definite along p
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        iterations += 1;
        let refresh = iterations % RESIDUAL_REFRESH == 0;
        if refresh {
            true_residual(a, b, &x, &mut r, &mut ap);
        }
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            if !refresh {
                true_residual(a, b, &x, &mut r, &mut ap);
                rel = norm2(&r) / b_norm;
            }
            if rel <= tol {
                break;
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    true_residual(a, b, &x, &mut r, &mut ap);
    rel = norm2(&r) / b_norm;
    let relative_residual = rel.to_f64_lossy();
    let converged = relative_residual.is_finite() && rel <= tol;
    Ok((x, SolveReport { iterations, relative_residual, converged }))
}

fn true_residual<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &[T], r: &mut [T], scratch: &mut [T]) {
    a.matvec_into(x, scratch);
    for i in 0..r.len() {
        r[i] = b[i] - scratch[i];
    }
}

/// Relative gap `|uᵀAu − uᵀb| / |uᵀb|` on the reduced unknowns of `field`.
pub fn energy_identity_gap<T: Scalar>(system: &SparseSystem<'_, T>, field: &Field<'_, T>) -> f64 {
    let u: Vec<T> = (0..system.n()).map(|d| field.values()[system.dofs().node(d)]).collect();
    let au = system.matrix().matvec(&u);
    let energy = dot(&u, &au).to_f64_lossy();
    let work = dot(&u, system.rhs()).to_f64_lossy();
    if work == 0.0 && energy == 0.0 {
        0.0
    } else {
        (energy - work).abs() / work.abs().max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, assemble_operator, AssemblyOptions, OperatorCoefficients};
    use crate::domain::DomainSpec;

    fn diag_matrix(d: &[f64]) -> CsrMatrix<f64> {
        let n = d.len();
        CsrMatrix::from_parts(n, (0..=n).collect(), (0..n).collect(), d.to_vec()).unwrap()
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let a = diag_matrix(&[1.0, 2.0]);
        let (x, rep) = conjugate_gradient(&a, &[0.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }

    #[test]
    fn diagonal_system_in_one_step() {
        let a = diag_matrix(&[4.0, 0.5, 9.0]);
        let (x, rep) = conjugate_gradient(&a, &[1.0, 1.0, 3.0], &SolverOptions::default()).unwrap();
        assert!(rep.iterations <= 1 && rep.converged);
        assert!((x[0] - 0.25).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let a = diag_matrix(&[1.0]);
        assert!(conjugate_gradient(&a, &[1.0], &SolverOptions::with_tol(0.0)).is_err());
        assert!(conjugate_gradient(&a, &[1.0], &SolverOptions::with_tol(1.0)).is_err());
    }

    #[test]
    fn converges_and_restores_boundary() {
        let spec = DomainSpec::<f64>::wavy_film(1.0).unwrap();
        let mesh = Mesh::build(&spec, 16, 48).unwrap();
        let (_, sy) = assemble(&mesh, 1e-3).unwrap();
        let opts = SolverOptions::default();
        let (u, rep) = solve(&sy, &opts).unwrap();
        assert!(rep.converged && rep.relative_residual <= opts.tol);
        for n in 0..mesh.node_count() {
            if mesh.is_dirichlet(n) {
                assert_eq!(u.values()[n], 0.0);
            }
        }
        assert!(energy_identity_gap(&sy, &u) < 1e-8);
        let (u2, _) = solve(&sy, &opts).unwrap();
        assert_eq!(u.values(), u2.values());
    }

    #[test]
    fn non_convergence_is_reported() {
        let mesh = Mesh::build(&DomainSpec::<f64>::flat(0.0, 1.0, 0.4, 0.6).unwrap(), 4, 64).unwrap();
        let (_, sy) = assemble(&mesh, 1e-3).unwrap();
        let (_, rep) = solve(&sy, &SolverOptions { tol: 1e-12, max_iter: Some(2) }).unwrap();
        assert!(!rep.converged && rep.iterations == 2);
    }

    #[test]
    fn tampered_stiffness_breaks_energy_identity() {
        let mesh = Mesh::build(&DomainSpec::<f64>::flat(0.0, 1.0, 0.4, 0.6).unwrap(), 4, 32).unwrap();
        let coeffs = OperatorCoefficients { diffusion: -1e-2, reaction: 1.0 };
        let (_, sy) = assemble_operator(&mesh, coeffs, AssemblyOptions::default()).unwrap();
        let (u, rep) = solve(&sy, &SolverOptions::default()).unwrap();
        assert!(!rep.converged || energy_identity_gap(&sy, &u) > 1e-8);
    }

    #[test]
    fn single_precision_solve() {
        let spec = DomainSpec::<f32>::flat(0.0, 1.0, 0.4, 0.6).unwrap();
        let mesh = Mesh::build(&spec, 4, 40).unwrap();
        let (_, sy) = assemble(&mesh, 1e-2f32).unwrap();
        let (u, rep) = solve(&sy, &SolverOptions::with_tol(1e-5)).unwrap();
        assert!(rep.converged);
        assert!(u.max_abs() > 0.0);
    }
}
