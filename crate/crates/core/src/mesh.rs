//! Terrain-following triangulation of the wavy slab.
//!
//! Every column `x_i = i/nx` carries the same number of levels: `n_lo` intervals from
//! `b_l(x_i)` up to `f_l`, `n_film` intervals across the film and `n_hi` intervals from `f_r`
//! up to `b_r(x_i)`. The interfaces `y = f_l, f_r` are grid lines, so every triangle is
//! entirely film or entirely void. Each quad is split along its lower-left to upper-right
//! diagonal. The column at `x = 1` is the column at `x = 0`; triangles in the last strip
//! record which of their vertices must be shifted by `+1` in `x`.

use std::io::Write;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Film,
    Void,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Film => "film",
            Region::Void => "void",
        }
    }
}

/// Interval counts along one mapped column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnLayout {
    pub n_lo: usize,
    pub n_film: usize,
    pub n_hi: usize,
}

impl ColumnLayout {
    pub fn intervals(&self) -> usize {
        self.n_lo + self.n_film + self.n_hi
    }

    pub fn levels(&self) -> usize {
        self.intervals() + 1
    }
}

/// Signed area and basis-function gradients of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry<T> {
    pub area: T,
    pub grads: [[T; 2]; 3],
    /// `∫_T ∇φ_i = area · ∇φ_i`, computed directly from edge differences.
    pub grad_integrals: [[T; 2]; 3],
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Bit `k` set: vertex `k` is a seam node seen from the `x = 1` side.
    wraps: Vec<u8>,
    dirichlet: Vec<bool>,
    regions: Vec<Region>,
    nx: usize,
    layout: ColumnLayout,
}

/// Triangle quality summary.
#[derive(Clone, Copy, Debug)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
}

impl MeshQuality {
    pub const WARN_BELOW_DEG: f64 = 5.0;

    pub fn is_degenerate(&self) -> bool {
        self.min_angle_deg < Self::WARN_BELOW_DEG
    }
}

pub fn build_mesh<T: Scalar>(spec: &DomainSpec<T>, nx: usize, ny: usize) -> Result<Mesh<T>> {
    Mesh::build(spec, nx, ny)
}

impl<T: Scalar> Mesh<T> {
    pub fn build(spec: &DomainSpec<T>, nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 8 {
            return Err(Error::InvalidArgument(format!("need nx >= 4 and ny >= 8, got {nx} x {ny}")));
        }
        spec.derive_constants()?;
        let inv_nx = T::one() / T::from_usize_lossy(nx);
        let columns: Vec<(T, T, T)> = (0..nx)
            .map(|i| {
                let x = T::from_usize_lossy(i) * inv_nx;
                (x, spec.lower.eval(x), spec.upper.eval(x))
            })
            .collect();
        let layout = Self::plan_layout(spec, &columns, ny);
        let levels = layout.levels();

        let (f_l, f_r) = (spec.film_lo, spec.film_hi);
        let film_levels: Vec<T> = (0..=layout.n_film)
            .map(|j| match j {
                0 => f_l,
                j if j == layout.n_film => f_r,
                j => f_l + (f_r - f_l) * T::from_usize_lossy(j) / T::from_usize_lossy(layout.n_film),
            })
            .collect();

        let mut nodes = Vec::with_capacity(nx * levels);
        let mut dirichlet = Vec::with_capacity(nx * levels);
        for &(x, b_l, b_r) in &columns {
            for j in 0..levels {
                let y = if j < layout.n_lo {
                    b_l + (f_l - b_l) * T::from_usize_lossy(j) / T::from_usize_lossy(layout.n_lo)
                } else if j <= layout.n_lo + layout.n_film {
                    film_levels[j - layout.n_lo]
                } else if j == levels - 1 {
                    b_r
                } else {
                    let m = j - layout.n_lo - layout.n_film;
                    f_r + (b_r - f_r) * T::from_usize_lossy(m) / T::from_usize_lossy(layout.n_hi)
                };
                nodes.push([x, y]);
                dirichlet.push(j == 0 || j == levels - 1);
            }
        }

        let intervals = layout.intervals();
        let mut triangles = Vec::with_capacity(2 * nx * intervals);
        let mut wraps = Vec::with_capacity(2 * nx * intervals);
        let mut regions = Vec::with_capacity(2 * nx * intervals);
        for i in 0..nx {
            let right = (i + 1) % nx;
            let seam = i + 1 == nx;
            for j in 0..intervals {
                let ll = i * levels + j;
                let ul = ll + 1;
                let lr = right * levels + j;
                let ur = lr + 1;
                let region = if j >= layout.n_lo && j < layout.n_lo + layout.n_film {
                    Region::Film
                } else {
                    Region::Void
                };
                triangles.push([ll, lr, ur]);
                wraps.push(if seam { 0b110 } else { 0 });
                regions.push(region);
                triangles.push([ll, ur, ul]);
                wraps.push(if seam { 0b010 } else { 0 });
                regions.push(region);
            }
        }

        let mesh = Self { nodes, triangles, wraps, dirichlet, regions, nx, layout };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Splits `ny` intervals between the three segments in proportion to their mean heights.
    fn plan_layout(spec: &DomainSpec<T>, columns: &[(T, T, T)], ny: usize) -> ColumnLayout {
        let n = T::from_usize_lossy(columns.len());
        let mean_lo = columns.iter().map(|c| spec.film_lo - c.1).sum::<T>() / n;
        let mean_hi = columns.iter().map(|c| c.2 - spec.film_hi).sum::<T>() / n;
        let film = spec.thickness();
        let total = mean_lo + film + mean_hi;
        let share = |h: T| -> usize {
            let v = (T::from_usize_lossy(ny) * h / total).round().to_f64_lossy();
            (v as usize).max(1)
        };
        ColumnLayout { n_lo: share(mean_lo), n_film: share(film), n_hi: share(mean_hi) }
    }

    fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let g = self.geometry(t);
            if !(g.area > T::zero()) {
                return Err(Error::InvalidMesh(format!("triangle {t} has non-positive area {}", g.area)));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.dirichlet[node]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn locate_region(&self, t: usize) -> Region {
        self.regions[t]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn layout(&self) -> ColumnLayout {
        self.layout
    }

    /// `(nx, total intervals per column)`.
    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.layout.intervals())
    }

    pub fn node_index(&self, column: usize, level: usize) -> usize {
        column * self.layout.levels() + level
    }

    /// Seam pairs: node on `x = 0` and the level it represents on `x = 1`.
    pub fn periodic_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.layout.levels()).map(move |j| (self.node_index(0, j), j))
    }

    /// Vertex coordinates of triangle `t` with seam vertices unwrapped to `x = 1`.
    pub fn triangle_vertices(&self, t: usize) -> [[T; 2]; 3] {
        let tri = self.triangles[t];
        let wrap = self.wraps[t];
        let mut out = [[T::zero(); 2]; 3];
        for k in 0..3 {
            let [x, y] = self.nodes[tri[k]];
            out[k] = [if wrap & (1 << k) != 0 { x + T::one() } else { x }, y];
        }
        out
    }

    pub fn geometry(&self, t: usize) -> TriangleGeometry<T> {
        let v = self.triangle_vertices(t);
        let half = T::lit(0.5);
        let twice_area = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let area = half * twice_area;
        let mut grads = [[T::zero(); 2]; 3];
        let mut grad_integrals = [[T::zero(); 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let gx = v[j][1] - v[k][1];
            let gy = v[k][0] - v[j][0];
            grads[i] = [gx / twice_area, gy / twice_area];
            grad_integrals[i] = [half * gx, half * gy];
        }
        TriangleGeometry { area, grads, grad_integrals }
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let v = self.triangle_vertices(t);
        let three = T::lit(3.0);
        [(v[0][0] + v[1][0] + v[2][0]) / three, (v[0][1] + v[1][1] + v[2][1]) / three]
    }

    pub fn total_area(&self) -> T {
        let areas: Vec<T> = (0..self.triangle_count()).map(|t| self.geometry(t).area).collect();
        crate::scalar::pairwise_sum(&areas)
    }

    pub fn region_area(&self, region: Region) -> T {
        let areas: Vec<T> = (0..self.triangle_count())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.geometry(t).area)
            .collect();
        crate::scalar::pairwise_sum(&areas)
    }

    /// Largest vertical spacing of the intervals touching the film interfaces, over all
    /// columns. Boundary layers of width `√a` are resolved when this is well below `√a`.
    pub fn interface_spacing(&self) -> T {
        let ColumnLayout { n_lo, n_film, .. } = self.layout;
        let mut h = T::zero();
        for i in 0..self.nx {
            let y = |j: usize| self.nodes[self.node_index(i, j)][1];
            for j in [n_lo - 1, n_lo, n_lo + n_film - 1, n_lo + n_film] {
                h = h.max(y(j + 1) - y(j));
            }
        }
        h
    }

    /// Triangle containing `(x, y)`, with `x` taken modulo 1; `None` outside `D`.
    pub fn locate_point(&self, x: T, y: T) -> Option<usize> {
        let nx = T::from_usize_lossy(self.nx);
        let u = (x - x.floor()) * nx;
        let i = (u.floor().to_f64_lossy() as usize).min(self.nx - 1);
        let t = u - T::from_usize_lossy(i);
        let right = (i + 1) % self.nx;
        let level = |j: usize| {
            let yl = self.nodes[self.node_index(i, j)][1];
            let yr = self.nodes[self.node_index(right, j)][1];
            yl + (yr - yl) * t
        };
        let intervals = self.layout.intervals();
        if y < level(0) || y > level(intervals) {
            return None;
        }
        // largest j with level(j) <= y
        let (mut lo, mut hi) = (0, intervals);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if level(mid) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let first = 2 * (i * intervals + lo);
        let v = self.triangle_vertices(first);
        let p = [T::from_usize_lossy(i) / nx + t / nx, y];
        // side of the ll→ur diagonal; the first triangle lies below it
        let cross = (v[2][0] - v[0][0]) * (p[1] - v[0][1]) - (v[2][1] - v[0][1]) * (p[0] - v[0][0]);
        Some(if cross <= T::zero() { first } else { first + 1 })
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_a = f64::INFINITY;
        let mut max_a = 0.0f64;
        for t in 0..self.triangle_count() {
            let v = self.triangle_vertices(t).map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()]);
            for i in 0..3 {
                let (p, q, r) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
                let e1 = [q[0] - p[0], q[1] - p[1]];
                let e2 = [r[0] - p[0], r[1] - p[1]];
                let cos = (e1[0] * e2[0] + e1[1] * e2[1]) / (e1[0].hypot(e1[1]) * e2[0].hypot(e2[1]));
                let ang = cos.clamp(-1.0, 1.0).acos().to_degrees();
                min_a = min_a.min(ang);
                max_a = max_a.max(ang);
            }
        }
        MeshQuality { min_angle_deg: min_a, max_angle_deg: max_a }
    }

    /// Plain-text export: `nodes M triangles K`, then `x y` per node, then `i j k region`
    /// per triangle (node indices are 0-based, seam nodes appear once).
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "nodes {} triangles {}", self.node_count(), self.triangle_count())?;
        for [x, y] in &self.nodes {
            writeln!(w, "{x:e} {y:e}")?;
        }
        for (tri, region) in self.triangles.iter().zip(&self.regions) {
            writeln!(w, "{} {} {} {}", tri[0], tri[1], tri[2], region.as_str())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn unit_box() -> DomainSpec<f64> {
        DomainSpec::<f64>::flat(0.0, 1.0, 0.4, 0.6).unwrap()
    }

    #[test]
    fn film_elements_span_exact_interval() {
        let mesh = Mesh::build(&unit_box(), 4, 10).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..mesh.triangle_count() {
            if mesh.locate_region(t) == Region::Film {
                for v in mesh.triangle_vertices(t) {
                    lo = lo.min(v[1]);
                    hi = hi.max(v[1]);
                }
            }
        }
        assert_eq!((lo, hi), (0.4, 0.6));
    }

    #[test]
    fn regions_match_indicator_at_centroids() {
        for k in [0.0, 1.0, 2.0] {
            let spec = DomainSpec::<f64>::wavy_film(k).unwrap();
            let mesh = Mesh::build(&spec, 16, 40).unwrap();
            for t in 0..mesh.triangle_count() {
                let [x, y] = mesh.centroid(t);
                let expect = if spec.indicator(x, y) == 1 { Region::Film } else { Region::Void };
                assert_eq!(mesh.locate_region(t), expect);
                let ys = mesh.triangle_vertices(t).map(|v| v[1]);
                let straddles = ys.iter().any(|&y| y < spec.film_lo) && ys.iter().any(|&y| y > spec.film_lo)
                    || ys.iter().any(|&y| y < spec.film_hi) && ys.iter().any(|&y| y > spec.film_hi);
                assert!(!straddles);
            }
        }
    }

    #[test]
    fn counts_and_periodic_merge() {
        let spec = DomainSpec::<f64>::wavy_film(1.0).unwrap();
        let (nx, ny) = (8, 30);
        let mesh = Mesh::build(&spec, nx, ny).unwrap();
        let levels = mesh.layout().levels();
        assert!(mesh.triangle_count() <= 2 * nx * (ny + 2));
        assert_eq!(mesh.node_count(), nx * levels);
        assert!(mesh.node_count() < (nx + 1) * levels);
        assert_eq!(mesh.periodic_pairs().count(), levels);
    }

    #[test]
    fn dirichlet_exactly_on_boundary_curves() {
        let spec = DomainSpec::<f64>::wavy_film(1.0).unwrap();
        let mesh = Mesh::build(&spec, 8, 24).unwrap();
        for (n, &[x, y]) in mesh.nodes().iter().enumerate() {
            let on = y == spec.lower.eval(x) || y == spec.upper.eval(x);
            assert_eq!(mesh.is_dirichlet(n), on, "node {n} at ({x}, {y})");
        }
    }

    #[test]
    fn conforming_after_periodic_identification() {
        let mesh = Mesh::build(&DomainSpec::<f64>::wavy_film(1.0).unwrap(), 6, 12).unwrap();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in mesh.triangles() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            let boundary = mesh.is_dirichlet(a) && mesh.is_dirichlet(b);
            // boundary edges lie on y = b_l or y = b_r and belong to one triangle
            if count == 1 {
                assert!(boundary);
            } else {
                assert_eq!(count, 2, "edge {a}-{b}");
            }
        }
    }

    #[test]
    fn area_matches_profile_quadrature() {
        let spec = DomainSpec::<f64>::wavy_film(1.0).unwrap();
        let mesh = Mesh::build(&spec, 64, 40).unwrap();
        // composite Simpson with 20000 panels on (b_r − b_l)
        let n = 20_000;
        let f = |x: f64| spec.upper.eval(x) - spec.lower.eval(x);
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let exact = s * h / 3.0;
        assert!(((mesh.total_area() - exact) / exact).abs() < 1e-6);
        assert!((mesh.region_area(Region::Film) - 0.49).abs() < 1e-13);
    }

    #[test]
    fn refinement_keeps_film_area() {
        let spec = DomainSpec::<f64>::wavy_film(2.0).unwrap();
        for (nx, ny) in [(8, 16), (16, 32), (32, 64)] {
            let mesh = Mesh::build(&spec, nx, ny).unwrap();
            assert!((mesh.region_area(Region::Film) - 0.49).abs() < 1e-13);
        }
    }

    #[test]
    fn quality_is_reported() {
        let q = Mesh::build(&unit_box(), 4, 10).unwrap().quality();
        assert!(q.min_angle_deg > 5.0 && q.max_angle_deg <= 90.0 + 1e-9);
        let skinny = Mesh::build(&unit_box(), 4, 400).unwrap().quality();
        assert!(skinny.is_degenerate());
    }

    #[test]
    fn rejects_tiny_resolution() {
        assert!(Mesh::build(&unit_box(), 3, 10).is_err());
        assert!(Mesh::build(&unit_box(), 4, 7).is_err());
    }

    #[test]
    fn text_export_header() {
        let mesh = Mesh::build(&unit_box(), 4, 10).unwrap();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("nodes {} triangles {}", mesh.node_count(), mesh.triangle_count()));
        assert_eq!(text.lines().count(), 1 + mesh.node_count() + mesh.triangle_count());
        assert!(text.lines().last().unwrap().ends_with("void"));
    }

    #[test]
    fn gradients_reproduce_linear_functions() {
        let mesh = Mesh::build(&DomainSpec::<f64>::wavy_film(1.0).unwrap(), 8, 16).unwrap();
        for t in 0..mesh.triangle_count() {
            let v = mesh.triangle_vertices(t);
            let g = mesh.geometry(t);
            let f = |p: [f64; 2]| 2.0 * p[0] - 3.0 * p[1] + 1.0;
            let mut grad = [0.0; 2];
            for k in 0..3 {
                grad[0] += f(v[k]) * g.grads[k][0];
                grad[1] += f(v[k]) * g.grads[k][1];
            }
            assert!((grad[0] - 2.0).abs() < 1e-8 && (grad[1] + 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn locate_point_finds_enclosing_triangle() {
        let spec = DomainSpec::<f64>::wavy_film(1.0).unwrap();
        let mesh = Mesh::build(&spec, 8, 40).unwrap();
        for t in 0..mesh.triangle_count() {
            let [cx, cy] = mesh.centroid(t);
            assert_eq!(mesh.locate_point(cx, cy), Some(t));
            assert_eq!(mesh.locate_point(cx + 2.0, cy), Some(t));
        }
        assert_eq!(mesh.locate_point(0.5, -0.01), None);
        assert_eq!(mesh.locate_point(0.5, 2.5), None);
        assert!(mesh.locate_point(0.0, 2.5).is_some());
    }

}
