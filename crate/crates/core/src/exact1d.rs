//! Closed-form solution of the interval problem
//!
//! ```text
//! −a s'' + (1 − χ) s = −χ'   on (b_l, b_r),   s(b_l) = s(b_r) = 0,   χ = 1 on (f_l, f_r)
//! ```
//!
//! The solution is `−C_l sinh((y − b_l)/√a)` on the lower void, linear with slope `s*` on the
//! film and `−C_r sinh((y − b_r)/√a)` on the upper void. With `α = (f_l − b_l)/√a`,
//! `β = (b_r − f_r)/√a`, `k = T/√a` and `τ = tanh α + tanh β`:
//!
//! ```text
//! C_l = k sech α / (√a (τ + k)),   C_r = k sech β / (√a (τ + k)),   s* = τ / (a (τ + k))
//! ```
//!
//! which is the same closed form as `k cosh β / (√a (sinh(α+β) + k cosh α cosh β))`, rewritten
//! so that nothing overflows when `α` or `β` reach the thousands (small `a`).

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Arguments above this are handled through exponentials of differences.
const LOG_DOMAIN_THRESHOLD: f64 = 30.0;

/// Hyperbolic helpers that stay finite for large arguments.
pub mod hyper {
    use super::LOG_DOMAIN_THRESHOLD;
    use crate::scalar::Scalar;

    pub fn sech<T: Scalar>(x: T) -> T {
        let x = x.abs();
        if x <= T::lit(LOG_DOMAIN_THRESHOLD) {
            T::one() / x.cosh()
        } else {
            let e = (-x).exp();
            T::lit(2.0) * e / (T::one() + e * e)
        }
    }

    /// `sinh(u) / sinh(v)` for `0 ≤ u ≤ v`, `v > 0`.
    pub fn sinh_ratio<T: Scalar>(u: T, v: T) -> T {
        if v <= T::lit(LOG_DOMAIN_THRESHOLD) {
            u.sinh() / v.sinh()
        } else {
            let two = T::lit(2.0);
            (u - v).exp() * (-(-two * u).exp_m1()) / (-(-two * v).exp_m1())
        }
    }

    /// `cosh(u) / sinh(v)` for `0 ≤ u ≤ v`, `v > 0`.
    pub fn cosh_sinh_ratio<T: Scalar>(u: T, v: T) -> T {
        if v <= T::lit(LOG_DOMAIN_THRESHOLD) {
            u.cosh() / v.sinh()
        } else {
            let two = T::lit(2.0);
            (u - v).exp() * (T::one() + (-two * u).exp()) / (-(-two * v).exp_m1())
        }
    }

    /// `ln sinh(x)` for `x > 0`.
    pub fn ln_sinh<T: Scalar>(x: T) -> T {
        if x <= T::lit(LOG_DOMAIN_THRESHOLD) {
            x.sinh().ln()
        } else {
            x - T::LN_2() + (-(T::lit(-2.0) * x).exp()).ln_1p()
        }
    }

    /// `ln cosh(x)`.
    pub fn ln_cosh<T: Scalar>(x: T) -> T {
        let x = x.abs();
        if x <= T::lit(LOG_DOMAIN_THRESHOLD) {
            x.cosh().ln()
        } else {
            x - T::LN_2() + (T::lit(-2.0) * x).exp().ln_1p()
        }
    }
}

/// `D = (b_l, b_r)`, `Ω = (f_l, f_r)` with diffusion coefficient `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval1DProblem<T> {
    pub b_l: T,
    pub b_r: T,
    pub f_l: T,
    pub f_r: T,
    pub a: T,
}

impl<T: Scalar> Interval1DProblem<T> {
    pub fn new(b_l: T, b_r: T, f_l: T, f_r: T, a: T) -> Result<Self> {
        let p = Self { b_l, b_r, f_l, f_r, a };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.b_l < self.f_l && self.f_l < self.f_r && self.f_r < self.b_r) {
            return Err(Error::InvalidDomain(format!(
                "need b_l < f_l < f_r < b_r, got {} {} {} {}",
                self.b_l, self.f_l, self.f_r, self.b_r
            )));
        }
        if !(self.a > T::zero() && self.a.is_finite()) {
            return Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {}", self.a)));
        }
        Ok(())
    }

    pub fn thickness(&self) -> T {
        self.f_r - self.f_l
    }

    /// Smallest void gap `min{b_r − f_r, f_l − b_l}`.
    pub fn min_gap(&self) -> T {
        (self.b_r - self.f_r).min(self.f_l - self.b_l)
    }
}

/// Coefficients of the closed-form solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exact1DSolution<T> {
    pub c_l: T,
    pub c_r: T,
    pub alpha: T,
    pub beta: T,
    pub k: T,
    /// Film slope `s*`.
    pub slope: T,
    /// Fictitious thickness `2 / (√a s*)`.
    pub h: T,
    /// `h − T = 2√a + T(2 − τ)/τ`, evaluated without cancellation.
    pub excess: T,
    /// `s(f_l) = −C_l sinh α`.
    pub s_lo: T,
    /// `s(f_r) = C_r sinh β`.
    pub s_hi: T,
}

/// One-sided limit selector for derivatives at the film interfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

pub fn solve_exact<T: Scalar>(p: &Interval1DProblem<T>) -> Result<Exact1DSolution<T>> {
    p.validate()?;
    let sqrt_a = p.a.sqrt();
    let alpha = (p.f_l - p.b_l) / sqrt_a;
    let beta = (p.b_r - p.f_r) / sqrt_a;
    let k = p.thickness() / sqrt_a;
    let (ta, tb) = (alpha.tanh(), beta.tanh());
    let tau = ta + tb;
    let denom = tau + k;
    let amp = k / (sqrt_a * denom);
    let slope = tau / (p.a * denom);
    let two = T::lit(2.0);
    // 1 − tanh x = 2 / (e^{2x} + 1)
    let deficit = two / ((two * alpha).exp() + T::one()) + two / ((two * beta).exp() + T::one());
    let excess = two * sqrt_a + p.thickness() * deficit / tau;
    Ok(Exact1DSolution {
        c_l: amp * hyper::sech(alpha),
        c_r: amp * hyper::sech(beta),
        alpha,
        beta,
        k,
        slope,
        h: T::lit(2.0) / (sqrt_a * slope),
        excess,
        s_lo: -amp * ta,
        s_hi: amp * tb,
    })
}

impl<T: Scalar> Exact1DSolution<T> {
    /// `s(y)` for `b_l ≤ y ≤ b_r`.
    pub fn eval(&self, p: &Interval1DProblem<T>, y: T) -> T {
        let sqrt_a = p.a.sqrt();
        if y <= p.f_l {
            let xi = ((y - p.b_l) / sqrt_a).max(T::zero());
            self.s_lo * hyper::sinh_ratio(xi, self.alpha)
        } else if y >= p.f_r {
            let eta = ((p.b_r - y) / sqrt_a).max(T::zero());
            self.s_hi * hyper::sinh_ratio(eta, self.beta)
        } else {
            self.s_lo + self.slope * (y - p.f_l)
        }
    }

    /// `s'(y)`; at `f_l` and `f_r` the `side` picks the one-sided limit.
    pub fn derivative(&self, p: &Interval1DProblem<T>, y: T, side: Side) -> T {
        let sqrt_a = p.a.sqrt();
        let lower_void = y < p.f_l || (y == p.f_l && side == Side::Below);
        let upper_void = y > p.f_r || (y == p.f_r && side == Side::Above);
        if lower_void {
            let xi = ((y - p.b_l) / sqrt_a).max(T::zero());
            self.s_lo / sqrt_a * hyper::cosh_sinh_ratio(xi, self.alpha)
        } else if upper_void {
            let eta = ((p.b_r - y) / sqrt_a).max(T::zero());
            -self.s_hi / sqrt_a * hyper::cosh_sinh_ratio(eta, self.beta)
        } else {
            self.slope
        }
    }

    /// `s''(y)`: `s/a` in the voids, zero on the film.
    pub fn second_derivative(&self, p: &Interval1DProblem<T>, y: T) -> T {
        if y > p.f_l && y < p.f_r {
            T::zero()
        } else {
            self.eval(p, y) / p.a
        }
    }
}

pub fn eval_solution<T: Scalar>(sol: &Exact1DSolution<T>, p: &Interval1DProblem<T>, y: T) -> T {
    sol.eval(p, y)
}

/// Envelope `0 ≤ h − T ≤ 2√a + 4T exp(−2m/√a)` with `m` the smallest void gap.
///
/// The upper envelope relies on `(1 − tanh x)/tanh x ≤ 2e^{−2x}`, which only holds for
/// `x ≥ ln 2 / 2`; when a void gap is below roughly `0.35 √a` the true `h − T` can exceed it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThicknessEnvelope<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> ThicknessEnvelope<T> {
    pub fn contains(&self, excess: T) -> bool {
        self.lower <= excess && excess <= self.upper
    }
}

pub fn thickness_bound_1d<T: Scalar>(p: &Interval1DProblem<T>) -> ThicknessEnvelope<T> {
    let sqrt_a = p.a.sqrt();
    let upper = T::lit(2.0) * sqrt_a
        + T::lit(4.0) * p.thickness() * (T::lit(-2.0) * p.min_gap() / sqrt_a).exp();
    ThicknessEnvelope { lower: T::zero(), upper }
}

/// The 1D problem on the circumscribing slab `(min b_l, max b_r)`.
pub fn circumscribed_problem<T: Scalar>(spec: &DomainSpec<T>, a: T) -> Result<Interval1DProblem<T>> {
    let c = spec.derive_constants()?;
    Interval1DProblem::new(c.lower_min, c.upper_max, spec.film_lo, spec.film_hi, a)
}

/// Reference solution `s̄(y)` of the film problem on the circumscribing slab.
pub fn reference_film_solution<T: Scalar>(
    spec: &DomainSpec<T>,
    a: T,
) -> Result<(Interval1DProblem<T>, Exact1DSolution<T>)> {
    let p = circumscribed_problem(spec, a)?;
    Ok((p, solve_exact(&p)?))
}

/// `C_a = exp(−R/√a)/√a`, bounding `|s − s̄|` on `∂D`; `None` unless `R > 0`.
pub fn boundary_gap_constant<T: Scalar>(spec: &DomainSpec<T>, a: T) -> Result<Option<T>> {
    let c = spec.derive_constants()?;
    let sqrt_a = a.sqrt();
    Ok((c.r > T::zero()).then(|| (-c.r / sqrt_a).exp() / sqrt_a))
}
