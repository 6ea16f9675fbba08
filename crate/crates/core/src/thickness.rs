//! Local fictitious thickness `h = 2 / (√a div s)` on film triangles.

use std::io::Write;

use crate::domain::{DomainSpec, GeometricConstants};
use crate::error::{Error, Result};
use crate::mesh::Region;
use crate::scalar::{pairwise_sum, Scalar};
use crate::solver::Field;

/// Relative threshold, against `2/T`, below which `√a div s` counts as zero.
const NEAR_ZERO_DIV: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThicknessFlag {
    Ok,
    NonpositiveDiv,
    NearZeroDiv,
}

impl ThicknessFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ThicknessFlag::Ok => "ok",
            ThicknessFlag::NonpositiveDiv => "nonpositive_div",
            ThicknessFlag::NearZeroDiv => "near_zero_div",
        }
    }
}

/// One entry per film triangle, in mesh order.
#[derive(Clone, Debug)]
pub struct ThicknessField<T> {
    pub a: T,
    pub thickness: T,
    pub triangles: Vec<usize>,
    pub areas: Vec<T>,
    pub centroids: Vec<[T; 2]>,
    pub div_s: Vec<T>,
    /// `∂_y s^y` alone; equals `div_s` when `s^x` vanishes.
    pub div_y: Vec<T>,
    pub inv_h: Vec<T>,
    pub h: Vec<Option<T>>,
    pub flags: Vec<ThicknessFlag>,
}

/// Elementwise `∂_x s^x + ∂_y s^y`, one value per triangle.
pub fn divergence<T: Scalar>(sx: &Field<'_, T>, sy: &Field<'_, T>) -> Result<Vec<T>> {
    if !sx.same_mesh(sy) {
        return Err(Error::MeshMismatch);
    }
    Ok((0..sx.mesh().triangle_count()).map(|t| sx.gradient(t)[0] + sy.gradient(t)[1]).collect())
}

pub fn thickness_field<T: Scalar>(sx: &Field<'_, T>, sy: &Field<'_, T>, a: T, thickness: T) -> Result<ThicknessField<T>> {
    if !sx.same_mesh(sy) {
        return Err(Error::MeshMismatch);
    }
    if !(a > T::zero()) {
        return Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {a}")));
    }
    let mesh = sx.mesh();
    let sqrt_a = a.sqrt();
    let two = T::lit(2.0);
    let zero_cut = T::lit(NEAR_ZERO_DIV) * two / thickness;
    let mut tf = ThicknessField {
        a,
        thickness,
        triangles: Vec::new(),
        areas: Vec::new(),
        centroids: Vec::new(),
        div_s: Vec::new(),
        div_y: Vec::new(),
        inv_h: Vec::new(),
        h: Vec::new(),
        flags: Vec::new(),
    };
    for t in 0..mesh.triangle_count() {
        if mesh.locate_region(t) != Region::Film {
            continue;
        }
        let dy = sy.gradient(t)[1];
        let div = sx.gradient(t)[0] + dy;
        let scaled = sqrt_a * div;
        let flag = if scaled.abs() < zero_cut {
            ThicknessFlag::NearZeroDiv
        } else if scaled <= T::zero() {
            ThicknessFlag::NonpositiveDiv
        } else {
            ThicknessFlag::Ok
        };
        tf.triangles.push(t);
        tf.areas.push(mesh.geometry(t).area);
        tf.centroids.push(mesh.centroid(t));
        tf.div_s.push(div);
        tf.div_y.push(dy);
        tf.inv_h.push(scaled / two);
        tf.h.push((flag == ThicknessFlag::Ok).then(|| two / scaled));
        tf.flags.push(flag);
    }
    Ok(tf)
}

impl<T: Scalar> ThicknessField<T> {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn film_area(&self) -> T {
        pairwise_sum(&self.areas)
    }

    /// Area fraction of the film with `lo < h < hi` (flagged triangles count as outside).
    pub fn band_fraction(&self, lo: T, hi: T) -> T {
        let inside: Vec<T> = self
            .h
            .iter()
            .zip(&self.areas)
            .map(|(h, &area)| match h {
                Some(h) if lo < *h && *h < hi => area,
                _ => T::zero(),
            })
            .collect();
        pairwise_sum(&inside) / self.film_area()
    }

    /// `‖inv_h − 1/T‖_{L²(Ω)}` with elementwise-constant `inv_h`.
    pub fn l2_inv_error(&self) -> T {
        self.l2_against(&self.inv_h)
    }

    /// Same norm with `inv_h` built from `∂_y s^y` only.
    pub fn l2_inv_error_dy(&self) -> T {
        let half_sqrt_a = self.a.sqrt() / T::lit(2.0);
        let inv: Vec<T> = self.div_y.iter().map(|&d| half_sqrt_a * d).collect();
        self.l2_against(&inv)
    }

    fn l2_against(&self, inv: &[T]) -> T {
        let target = T::one() / self.thickness;
        let terms: Vec<T> = inv.iter().zip(&self.areas).map(|(&v, &area)| area * (v - target) * (v - target)).collect();
        pairwise_sum(&terms).sqrt()
    }

    /// Relative spread `(max h − min h) / mean h` over unflagged triangles.
    pub fn relative_spread(&self) -> Option<T> {
        let hs: Vec<T> = self.h.iter().flatten().copied().collect();
        if hs.is_empty() {
            return None;
        }
        let lo = hs.iter().copied().fold(T::infinity(), T::min);
        let hi = hs.iter().copied().fold(T::neg_infinity(), T::max);
        let mean = pairwise_sum(&hs) / T::from_usize_lossy(hs.len());
        Some((hi - lo) / mean)
    }

    /// CSV with header `cx,cy,div_s,inv_h,h,flag`; `h` is `NaN` on flagged triangles.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "cx,cy,div_s,inv_h,h,flag")?;
        for i in 0..self.len() {
            let [cx, cy] = self.centroids[i];
            let h = self.h[i].map_or_else(|| "NaN".to_string(), |h| format!("{h:e}"));
            writeln!(w, "{cx:e},{cy:e},{:e},{:e},{h},{}", self.div_s[i], self.inv_h[i], self.flags[i].as_str())?;
        }
        Ok(())
    }
}

/// `(2/T^{3/2})√a + (4/√T) e^{−2m̄/√a} + (1/√m) e^{−R/√a}`; `None` unless `R > 0` and `m > 0`.
pub fn film_theorem_bound<T: Scalar>(c: &GeometricConstants<T>, a: T) -> Option<T> {
    if !(c.r > T::zero() && c.m > T::zero()) {
        return None;
    }
    let sqrt_a = a.sqrt();
    let t = c.thickness;
    let two = T::lit(2.0);
    Some(
        two / (t * t.sqrt()) * sqrt_a
            + T::lit(4.0) / t.sqrt() * (-two * c.m_bar / sqrt_a).exp()
            + (-c.r / sqrt_a).exp() / c.m.sqrt(),
    )
}

#[derive(Clone, Copy, Debug)]
pub struct FilmErrorReport<T> {
    pub a: T,
    pub l2_inv_error: T,
    /// Error of the `∂_y s^y`-only thickness.
    pub l2_inv_error_dy: T,
    pub theorem_bound: Option<T>,
    pub band: (T, T),
    pub band_fraction: T,
}

pub fn film_error<T: Scalar>(tf: &ThicknessField<T>, spec: &DomainSpec<T>, a: T, band: (T, T)) -> Result<FilmErrorReport<T>> {
    let c = spec.derive_constants()?;
    Ok(FilmErrorReport {
        a,
        l2_inv_error: tf.l2_inv_error(),
        l2_inv_error_dy: tf.l2_inv_error_dy(),
        theorem_bound: film_theorem_bound(&c, a),
        band,
        band_fraction: tf.band_fraction(band.0, band.1),
    })
}
