//! P1 Galerkin assembly of
//!
//! ```text
//! a ∫_D ∇s·∇u + ∫_{D∖Ω} s u = ∫_Ω ∂_i u      for every u vanishing on ∂D
//! ```
//!
//! one scalar system per component `i`. The bilinear form is the same for both components,
//! so the reduced matrix is built once and shared; only the load differs.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Region};
use crate::scalar::Scalar;

/// Rows above this are multiplied in parallel.
const PARALLEL_ROWS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
}

impl Component {
    pub fn axis(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MassKind {
    /// Exact integration of products of linear functions: `area/6` diagonal, `area/12` off.
    #[default]
    Consistent,
    /// Row-sum lumping: `area/3` on the diagonal.
    Lumped,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AssemblyOptions {
    pub mass: MassKind,
}

/// Symmetric matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds from raw CSR arrays; column indices must be sorted within each row.
    pub fn from_parts(n: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if row_offsets.len() != n + 1 || col_indices.len() != values.len() || row_offsets[n] != values.len() {
            return Err(Error::InvalidArgument("inconsistent CSR arrays".into()));
        }
        for r in 0..n {
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n) {
                return Err(Error::InvalidArgument(format!("row {r} has unsorted or out-of-range columns")));
            }
        }
        Ok(Self { n, row_offsets, col_indices, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_offsets[r];
        self.col_indices[start..self.row_offsets[r + 1]].binary_search(&c).ok().map(|p| start + p)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.slot(r, c).map_or(T::zero(), |s| self.values[s])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Bitwise symmetry of values and pattern.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| {
            self.row(r).all(|(c, v)| self.slot(c, r).is_some_and(|s| self.values[s] == v))
        })
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        let row = |r: usize| self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]);
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, out)| *out = row(r));
        } else {
            y.iter_mut().enumerate().for_each(|(r, out)| *out = row(r));
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Max-row-sum norm `‖A‖_∞`.
    pub fn norm_inf(&self) -> T {
        (0..self.n).map(|r| self.row(r).fold(T::zero(), |a, (_, v)| a + v.abs())).fold(T::zero(), T::max)
    }

    /// `%%MatrixMarket matrix coordinate real symmetric`, lower triangle, 1-based.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let lower: usize = (0..self.n).map(|r| self.row(r).filter(|&(c, _)| c <= r).count()).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower)?;
        for r in 0..self.n {
            for (c, v) in self.row(r).filter(|&(c, _)| c <= r) {
                writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }

    /// Reads a real coordinate file (`general` or `symmetric`) into CSR.
    pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
        let lower = header.to_ascii_lowercase();
        if !lower.starts_with("%%matrixmarket matrix coordinate real") {
            return Err(Error::MatrixMarket(format!("unsupported header `{header}`")));
        }
        let symmetric = lower.trim_end().ends_with("symmetric");
        let mut size: Option<(usize, usize)> = None;
        let mut triplets: Vec<(usize, usize, T)> = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            let bad = || Error::MatrixMarket(format!("bad line `{t}`"));
            match size {
                None => {
                    if parts.len() != 3 {
                        return Err(bad());
                    }
                    let rows: usize = parts[0].parse().map_err(|_| bad())?;
                    let cols: usize = parts[1].parse().map_err(|_| bad())?;
                    if rows != cols {
                        return Err(Error::MatrixMarket("matrix is not square".into()));
                    }
                    size = Some((rows, parts[2].parse().map_err(|_| bad())?));
                }
                Some((n, _)) => {
                    if parts.len() != 3 {
                        return Err(bad());
                    }
                    let r: usize = parts[0].parse().map_err(|_| bad())?;
                    let c: usize = parts[1].parse().map_err(|_| bad())?;
                    let v: f64 = parts[2].parse().map_err(|_| bad())?;
                    if r == 0 || c == 0 || r > n || c > n {
                        return Err(Error::MatrixMarket(format!("index out of range in `{t}`")));
                    }
                    triplets.push((r - 1, c - 1, T::lit(v)));
                    if symmetric && r != c {
                        triplets.push((c - 1, r - 1, T::lit(v)));
                    }
                }
            }
        }
        let (n, declared) = size.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
        let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
        if stored != declared {
            return Err(Error::MatrixMarket(format!("declared {declared} entries, found {stored}")));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                let end = vals.len() - 1;
                vals[end] = vals[end] + v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::from_parts(n, row_offsets, cols, vals)
    }
}

/// Numbering of the free (non-Dirichlet) nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    node_to_dof: Vec<Option<usize>>,
    dof_to_node: Vec<usize>,
}

impl DofMap {
    pub fn new<T: Scalar>(mesh: &Mesh<T>) -> Self {
        let mut node_to_dof = vec![None; mesh.node_count()];
        let mut dof_to_node = Vec::new();
        for (n, slot) in node_to_dof.iter_mut().enumerate() {
            if !mesh.is_dirichlet(n) {
                *slot = Some(dof_to_node.len());
                dof_to_node.push(n);
            }
        }
        Self { node_to_dof, dof_to_node }
    }

    pub fn len(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_node.is_empty()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.node_to_dof[node]
    }

    pub fn node(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }
}

/// Reduced SPD system for one scalar unknown.
#[derive(Clone, Debug)]
pub struct SparseSystem<'m, T> {
    pub(crate) mesh: &'m Mesh<T>,
    pub(crate) matrix: Arc<CsrMatrix<T>>,
    pub(crate) dofs: Arc<DofMap>,
    pub(crate) rhs: Vec<T>,
    /// Per-node Dirichlet values (zero on free nodes).
    pub(crate) boundary: Vec<T>,
    pub(crate) component: Option<Component>,
}

impl<'m, T: Scalar> SparseSystem<'m, T> {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn mesh(&self) -> &'m Mesh<T> {
        self.mesh
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn shared_matrix(&self) -> Arc<CsrMatrix<T>> {
        Arc::clone(&self.matrix)
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn boundary_values(&self) -> &[T] {
        &self.boundary
    }

    pub fn component(&self) -> Option<Component> {
        self.component
    }

    /// Load scattered back onto the full node set (zero at Dirichlet nodes).
    pub fn nodal_rhs(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.mesh.node_count()];
        for (d, &v) in self.rhs.iter().enumerate() {
            out[self.dofs.node(d)] = v;
        }
        out
    }
}

/// Coefficients of the bilinear form `diffusion ∫∇s·∇u + reaction ∫_{void} s u`.
#[derive(Clone, Copy, Debug)]
pub struct OperatorCoefficients<T> {
    pub diffusion: T,
    pub reaction: T,
}

struct Operator<T> {
    matrix: CsrMatrix<T>,
    /// Couplings from free rows to Dirichlet nodes: `(dof, node, value)`.
    lift: Vec<(usize, usize, T)>,
}

fn element_matrix<T: Scalar>(mesh: &Mesh<T>, t: usize, coeffs: OperatorCoefficients<T>, mass: MassKind) -> [[T; 3]; 3] {
    let g = mesh.geometry(t);
    let mut ke = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let gi = g.grads[i];
            let gj = g.grads[j];
            ke[i][j] = coeffs.diffusion * g.area * (gi[0] * gj[0] + gi[1] * gj[1]);
        }
    }
    if mesh.locate_region(t) == Region::Void {
        let r = coeffs.reaction * g.area;
        for (i, row) in ke.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let m = match (mass, i == j) {
                    (MassKind::Consistent, true) => r / T::lit(6.0),
                    (MassKind::Consistent, false) => r / T::lit(12.0),
                    (MassKind::Lumped, true) => r / T::lit(3.0),
                    (MassKind::Lumped, false) => T::zero(),
                };
                *v = *v + m;
            }
        }
    }
    ke
}

fn build_operator<T: Scalar>(
    mesh: &Mesh<T>,
    dofs: &DofMap,
    coeffs: OperatorCoefficients<T>,
    mass: MassKind,
) -> Operator<T> {
    let n = dofs.len();
    // pattern: free node pairs that share a triangle
    let mut pattern: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for tri in mesh.triangles() {
        for &p in tri {
            if let Some(dp) = dofs.dof(p) {
                for &q in tri {
                    if let Some(dq) = dofs.dof(q) {
                        pattern[dp].insert(dq);
                    }
                }
            }
        }
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::new();
    for row in &pattern {
        col_indices.extend(row.iter().copied());
        row_offsets.push(col_indices.len());
    }
    drop(pattern);
    let mut matrix = CsrMatrix { n, row_offsets, col_indices, values: vec![T::zero(); 0] };
    matrix.values = vec![T::zero(); matrix.col_indices.len()];

    let mut lift = Vec::new();
    for t in 0..mesh.triangle_count() {
        let tri = mesh.triangles()[t];
        let ke = element_matrix(mesh, t, coeffs, mass);
        for i in 0..3 {
            let Some(di) = dofs.dof(tri[i]) else { continue };
            for j in 0..3 {
                match dofs.dof(tri[j]) {
                    // upper triangle only; mirrored below
                    Some(dj) if dj >= di => {
                        let s = matrix.slot(di, dj).expect("pattern covers element");
                        matrix.values[s] = matrix.values[s] + ke[i][j];
                    }
                    Some(_) => {}
                    None => lift.push((di, tri[j], ke[i][j])),
                }
            }
        }
    }
    for r in 0..n {
        for p in matrix.row_offsets[r]..matrix.row_offsets[r + 1] {
            let c = matrix.col_indices[p];
            if c < r {
                let s = matrix.slot(c, r).expect("symmetric pattern");
                matrix.values[p] = matrix.values[s];
            }
        }
    }
    Operator { matrix, lift }
}

/// Per-node load `∫_Ω ∂_axis φ_node`, summed over film triangles.
fn film_load<T: Scalar>(mesh: &Mesh<T>, dofs: &DofMap, axis: usize) -> Vec<T> {
    let mut rhs = vec![T::zero(); dofs.len()];
    for t in 0..mesh.triangle_count() {
        if mesh.locate_region(t) != Region::Film {
            continue;
        }
        let g = mesh.geometry(t);
        for (k, &node) in mesh.triangles()[t].iter().enumerate() {
            if let Some(d) = dofs.dof(node) {
                rhs[d] = rhs[d] + g.grad_integrals[k][axis];
            }
        }
    }
    rhs
}

fn check_coefficient<T: Scalar>(a: T) -> Result<()> {
    if a > T::zero() && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {a}")))
    }
}

/// Assembles the x- and y-component systems with the default (consistent) mass matrix.
pub fn assemble<T: Scalar>(mesh: &Mesh<T>, a: T) -> Result<(SparseSystem<'_, T>, SparseSystem<'_, T>)> {
    assemble_with(mesh, a, AssemblyOptions::default())
}

pub fn assemble_with<T: Scalar>(
    mesh: &Mesh<T>,
    a: T,
    options: AssemblyOptions,
) -> Result<(SparseSystem<'_, T>, SparseSystem<'_, T>)> {
    check_coefficient(a)?;
    assemble_operator(mesh, OperatorCoefficients { diffusion: a, reaction: T::one() }, options)
}

/// Assembly with arbitrary coefficients (no positivity check).
pub fn assemble_operator<T: Scalar>(
    mesh: &Mesh<T>,
    coeffs: OperatorCoefficients<T>,
    options: AssemblyOptions,
) -> Result<(SparseSystem<'_, T>, SparseSystem<'_, T>)> {
    let dofs = Arc::new(DofMap::new(mesh));
    if dofs.is_empty() {
        return Err(Error::InvalidMesh("mesh has no free nodes".into()));
    }
    let op = build_operator(mesh, &dofs, coeffs, options.mass);
    let matrix = Arc::new(op.matrix);
    let zeros = vec![T::zero(); mesh.node_count()];
    let make = |c: Component| SparseSystem {
        mesh,
        matrix: Arc::clone(&matrix),
        dofs: Arc::clone(&dofs),
        rhs: film_load(mesh, &dofs, c.axis()),
        boundary: zeros.clone(),
        component: Some(c),
    };
    Ok((make(Component::X), make(Component::Y)))
}

/// Homogeneous equation with Dirichlet data `boundary_values` (one entry per node; only
/// Dirichlet nodes are read). The data is lifted into the right-hand side.
pub fn assemble_homogeneous<'m, T: Scalar>(
    mesh: &'m Mesh<T>,
    a: T,
    boundary_values: &[T],
) -> Result<SparseSystem<'m, T>> {
    assemble_homogeneous_with(mesh, a, boundary_values, AssemblyOptions::default())
}

pub fn assemble_homogeneous_with<'m, T: Scalar>(
    mesh: &'m Mesh<T>,
    a: T,
    boundary_values: &[T],
    options: AssemblyOptions,
) -> Result<SparseSystem<'m, T>> {
    check_coefficient(a)?;
    if boundary_values.len() != mesh.node_count() {
        return Err(Error::InvalidArgument(format!(
            "expected {} boundary values, got {}",
            mesh.node_count(),
            boundary_values.len()
        )));
    }
    let mut boundary = vec![T::zero(); mesh.node_count()];
    for (n, &v) in boundary_values.iter().enumerate() {
        if mesh.is_dirichlet(n) {
            if !v.is_finite() {
                return Err(Error::MissingBoundaryValue(n));
            }
            boundary[n] = v;
        }
    }
    let dofs = Arc::new(DofMap::new(mesh));
    let op = build_operator(mesh, &dofs, OperatorCoefficients { diffusion: a, reaction: T::one() }, options.mass);
    let mut rhs = vec![T::zero(); dofs.len()];
    for &(d, node, v) in &op.lift {
        rhs[d] = rhs[d] - v * boundary[node];
    }
    Ok(SparseSystem { mesh, matrix: Arc::new(op.matrix), dofs, rhs, boundary, component: None })
}
