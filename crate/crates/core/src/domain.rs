//! Wavy slab `D = {(x, y) : b_l(x) < y < b_r(x)}` over the unit torus in `x`,
//! containing the straight film `Ω = T¹ × (f_l, f_r)`.

use std::fmt::Write as _;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of uniform samples used to bracket extrema of Fourier profiles.
const FOURIER_SAMPLES: usize = 4096;
/// Bracket width at which golden-section refinement stops.
const EXTREMUM_BRACKET: f64 = 1e-12;

/// A 1-periodic boundary curve `b(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryProfile<T> {
    Constant { base: T },
    /// `base − amplitude · sin²(π · frequency · x)`
    SinSquared { base: T, amplitude: T, frequency: u32 },
    /// `base + Σ_j (c_j cos 2πjx + s_j sin 2πjx)`, `j = 1, 2, …`
    Fourier { base: T, coefficients: Vec<(T, T)> },
}

impl<T: Scalar> BoundaryProfile<T> {
    pub fn constant(base: T) -> Self {
        Self::Constant { base }
    }

    pub fn sin_squared(base: T, amplitude: T, frequency: u32) -> Self {
        Self::SinSquared { base, amplitude, frequency }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::SinSquared { amplitude, frequency, .. } => amplitude.is_zero() || *frequency == 0,
            Self::Fourier { coefficients, .. } => {
                coefficients.iter().all(|(c, s)| c.is_zero() && s.is_zero())
            }
        }
    }

    /// Evaluates the profile; `x` is wrapped onto `[0, 1)`.
    pub fn eval(&self, x: T) -> T {
        let x = x - x.floor();
        match self {
            Self::Constant { base } => *base,
            Self::SinSquared { base, amplitude, frequency } => {
                let s = (T::PI() * T::from_u32(*frequency).unwrap() * x).sin();
                *base - *amplitude * s * s
            }
            Self::Fourier { base, coefficients } => {
                let two_pi_x = T::lit(2.0) * T::PI() * x;
                coefficients.iter().enumerate().fold(*base, |acc, (j, &(c, s))| {
                    let arg = T::from_usize_lossy(j + 1) * two_pi_x;
                    acc + c * arg.cos() + s * arg.sin()
                })
            }
        }
    }

    /// `(min, max)` of the profile over one period.
    pub fn extrema(&self) -> (T, T) {
        match self {
            Self::Constant { base } => (*base, *base),
            Self::SinSquared { base, amplitude, frequency } => {
                if *frequency == 0 {
                    (*base, *base)
                } else {
                    let other = *base - *amplitude;
                    (base.min(other), base.max(other))
                }
            }
            Self::Fourier { .. } => (self.refined_extremum(false), self.refined_extremum(true)),
        }
    }

    fn refined_extremum(&self, maximize: bool) -> T {
        let sign = if maximize { -T::one() } else { T::one() };
        let f = |x: T| sign * self.eval(x);
        let n = FOURIER_SAMPLES;
        let step = T::one() / T::from_usize_lossy(n);
        let samples: Vec<T> = (0..n).map(|i| f(T::from_usize_lossy(i) * step)).collect();
        let mut best = samples.iter().copied().fold(T::infinity(), T::min);
        for i in 0..n {
            let prev = samples[(i + n - 1) % n];
            let next = samples[(i + 1) % n];
            if samples[i] <= prev && samples[i] <= next {
                let center = T::from_usize_lossy(i) * step;
                let x = golden_section_min(&f, center - step, center + step);
                best = best.min(f(x));
            }
        }
        sign * best
    }
}

/// Golden-section search for a minimum of a unimodal function on `[lo, hi]`.
fn golden_section_min<T: Scalar>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let floor = T::lit(EXTREMUM_BRACKET).max(T::lit(8.0) * T::epsilon());
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= floor {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Global domain and film description.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec<T> {
    pub lower: BoundaryProfile<T>,
    pub upper: BoundaryProfile<T>,
    pub film_lo: T,
    pub film_hi: T,
}

/// Extrema of the boundary profiles and the derived gap constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricConstants<T> {
    /// Film thickness `f_r − f_l`.
    pub thickness: T,
    pub lower_min: T,
    pub lower_max: T,
    pub upper_min: T,
    pub upper_max: T,
    /// Gap of the circumscribing slab minus boundary waviness; positive when the
    /// exponential boundary estimate applies.
    pub r: T,
    /// Smallest film-to-boundary gap, `min{b_r^min − f_r, f_l − b_l^max}`.
    pub m: T,
    /// Film-to-boundary gap of the circumscribing slab, `min{b_r^max − f_r, f_l − b_l^min}`.
    pub m_bar: T,
}

impl<T: Scalar> DomainSpec<T> {
    /// Builds a spec and checks `max b_l < f_l < f_r < min b_r`.
    pub fn new(lower: BoundaryProfile<T>, upper: BoundaryProfile<T>, film_lo: T, film_hi: T) -> Result<Self> {
        let spec = Self { lower, upper, film_lo, film_hi };
        spec.derive_constants()?;
        Ok(spec)
    }

    /// Flat slab `(b_l, b_r)` with film `(f_l, f_r)`.
    pub fn flat(b_l: T, b_r: T, f_l: T, f_r: T) -> Result<Self> {
        Self::new(BoundaryProfile::constant(b_l), BoundaryProfile::constant(b_r), f_l, f_r)
    }

    /// Film `(0.5, 0.99)` between `y = 0` and `y = 3 − k sin²(πx)`.
    pub fn wavy_film(k: T) -> Result<Self> {
        Self::new(
            BoundaryProfile::constant(T::zero()),
            BoundaryProfile::sin_squared(T::lit(3.0), k, 1),
            T::lit(0.5),
            T::lit(0.99),
        )
    }

    pub fn thickness(&self) -> T {
        self.film_hi - self.film_lo
    }

    pub fn is_flat(&self) -> bool {
        self.lower.is_flat() && self.upper.is_flat()
    }

    /// Characteristic function of the film; zero on the interface lines.
    pub fn indicator(&self, _x: T, y: T) -> u8 {
        u8::from(self.film_lo < y && y < self.film_hi)
    }

    pub fn derive_constants(&self) -> Result<GeometricConstants<T>> {
        let (lower_min, lower_max) = self.lower.extrema();
        let (upper_min, upper_max) = self.upper.extrema();
        let values = [lower_min, lower_max, upper_min, upper_max, self.film_lo, self.film_hi];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("non-finite geometry".into()));
        }
        if !(lower_max < self.film_lo && self.film_lo < self.film_hi && self.film_hi < upper_min) {
            return Err(Error::InvalidDomain(format!(
                "need max b_l < f_l < f_r < min b_r, got {lower_max} < {} < {} < {upper_min}",
                self.film_lo, self.film_hi
            )));
        }
        let m_bar = (upper_max - self.film_hi).min(self.film_lo - lower_min);
        let waviness = (upper_max - upper_min).max(lower_max - lower_min);
        Ok(GeometricConstants {
            thickness: self.thickness(),
            lower_min,
            lower_max,
            upper_min,
            upper_max,
            r: m_bar - waviness,
            m: (upper_min - self.film_hi).min(self.film_lo - lower_max),
            m_bar,
        })
    }

    /// Serializes to the `key = value` config format.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        write_profile(&mut out, "lower", &self.lower);
        write_profile(&mut out, "upper", &self.upper);
        let _ = writeln!(out, "film_lo = {}", self.film_lo);
        let _ = writeln!(out, "film_hi = {}", self.film_hi);
        out
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let lower = read_profile(kv, "lower")?;
        let upper = read_profile(kv, "upper")?;
        let film_lo = T::lit(kv.parse_value::<f64>("film_lo")?);
        let film_hi = T::lit(kv.parse_value::<f64>("film_hi")?);
        Self::new(lower, upper, film_lo, film_hi)
    }
}

fn write_profile<T: Scalar>(out: &mut String, prefix: &str, p: &BoundaryProfile<T>) {
    match p {
        BoundaryProfile::Constant { base } => {
            let _ = writeln!(out, "{prefix}.kind = constant");
            let _ = writeln!(out, "{prefix}.base = {base}");
        }
        BoundaryProfile::SinSquared { base, amplitude, frequency } => {
            let _ = writeln!(out, "{prefix}.kind = sin2");
            let _ = writeln!(out, "{prefix}.base = {base}");
            let _ = writeln!(out, "{prefix}.amplitude = {amplitude}");
            let _ = writeln!(out, "{prefix}.frequency = {frequency}");
        }
        BoundaryProfile::Fourier { base, coefficients } => {
            let _ = writeln!(out, "{prefix}.kind = fourier");
            let _ = writeln!(out, "{prefix}.base = {base}");
            let pairs: Vec<String> = coefficients.iter().map(|(c, s)| format!("{c}:{s}")).collect();
            let _ = writeln!(out, "{prefix}.coefficients = {}", pairs.join(", "));
        }
    }
}

fn read_profile<T: Scalar>(kv: &KeyValues, prefix: &str) -> Result<BoundaryProfile<T>> {
    let kind_key = format!("{prefix}.kind");
    let base = T::lit(kv.parse_value::<f64>(&format!("{prefix}.base"))?);
    match kv.require(&kind_key)? {
        "constant" => Ok(BoundaryProfile::Constant { base }),
        "sin2" => Ok(BoundaryProfile::SinSquared {
            base,
            amplitude: T::lit(kv.parse_value::<f64>(&format!("{prefix}.amplitude"))?),
            frequency: kv.parse_or(&format!("{prefix}.frequency"), 1)?,
        }),
        "fourier" => {
            let key = format!("{prefix}.coefficients");
            let coefficients = kv
                .require(&key)?
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|pair| {
                    let parsed = pair
                        .split_once(':')
                        .and_then(|(c, s)| Some((c.trim().parse::<f64>().ok()?, s.trim().parse::<f64>().ok()?)));
                    parsed.map(|(c, s)| (T::lit(c), T::lit(s))).ok_or_else(|| Error::Config {
                        line: kv.line_of(&key),
                        message: format!("expected `cos:sin` pair, got `{pair}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BoundaryProfile::Fourier { base, coefficients })
        }
        other => Err(Error::Config {
            line: kv.line_of(&kind_key),
            message: format!("unknown profile kind `{other}` (constant, sin2, fourier)"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_squared_values() {
        let p = BoundaryProfile::<f64>::sin_squared(3.0, 1.0, 1);
        assert_eq!(p.eval(0.0), 3.0);
        assert!((p.eval(0.5) - 2.0).abs() < 1e-15);
        assert_eq!(BoundaryProfile::<f64>::constant(0.0).eval(0.37), 0.0);
        for &x in &[0.1, 0.33, 0.71] {
            assert!((p.eval(x) - p.eval(x + 1.0)).abs() < 1e-14);
            assert!((p.eval(x) - p.eval(x - 3.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn preset_r_values() {
        let c = DomainSpec::<f64>::wavy_film(0.0).unwrap().derive_constants().unwrap();
        assert!((c.r - 0.5).abs() < 1e-15);
        assert!((c.m - 0.5).abs() < 1e-15 && (c.m_bar - 0.5).abs() < 1e-15);
        let c1 = DomainSpec::<f64>::wavy_film(1.0).unwrap().derive_constants().unwrap();
        assert!((c1.r + 0.5).abs() < 1e-15);
        assert_eq!(c1.upper_min, 2.0);
        let c2 = DomainSpec::<f64>::wavy_film(2.0).unwrap().derive_constants().unwrap();
        assert!(c2.r < 0.0);
        assert!((c2.m - 0.01).abs() < 1e-12);
    }

    #[test]
    fn symmetric_box_constants() {
        let c = DomainSpec::<f64>::flat(-1.0, 1.0, -0.5, 0.5).unwrap().derive_constants().unwrap();
        assert_eq!((c.r, c.m, c.m_bar, c.thickness), (0.5, 0.5, 0.5, 1.0));
    }

    #[test]
    fn rejects_film_outside_domain() {
        assert!(DomainSpec::<f64>::flat(0.0, 1.0, 0.6, 0.4).is_err());
        assert!(DomainSpec::<f64>::flat(0.0, 1.0, 0.0, 0.4).is_err());
        assert!(DomainSpec::<f64>::wavy_film(2.5).is_err()); // min b_r = 0.5 < f_r
    }

    #[test]
    fn indicator_open_interval() {
        let s = DomainSpec::<f64>::flat(0.0, 1.0, 0.4, 0.6).unwrap();
        assert_eq!(s.indicator(0.3, 0.5), 1);
        assert_eq!(s.indicator(0.3, 0.7), 0);
        assert_eq!(s.indicator(0.3, 0.4), 0);
        assert_eq!(s.indicator(0.3, 0.6), 0);
    }

    #[test]
    fn fourier_extrema_match_brute_force() {
        let p = BoundaryProfile::Fourier { base: 2.0, coefficients: vec![(0.1, -0.2), (0.05, 0.03), (0.0, 0.02)] };
        let (lo, hi) = p.extrema();
        let n = 1_000_000;
        let (mut blo, mut bhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = p.eval(i as f64 / n as f64);
            blo = blo.min(v);
            bhi = bhi.max(v);
        }
        assert!((lo - blo).abs() < 1e-9 && lo <= blo + 1e-15, "{lo} vs {blo}");
        assert!((hi - bhi).abs() < 1e-9 && hi >= bhi - 1e-15, "{hi} vs {bhi}");
    }

    #[test]
    fn config_round_trip() {
        let spec = DomainSpec::<f64>::new(
            BoundaryProfile::Fourier { base: -0.1, coefficients: vec![(0.01, 0.02)] },
            BoundaryProfile::<f64>::sin_squared(3.0, 1.0, 2),
            0.5,
            0.99,
        )
        .unwrap();
        let text = spec.to_config_string();
        assert_eq!(DomainSpec::<f64>::from_config_str(&text).unwrap(), spec);
    }

    #[test]
    fn config_errors() {
        let err = DomainSpec::<f64>::from_config_str("lower.kind = blob\nlower.base = 0").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }), "{err}");
        assert!(DomainSpec::<f64>::from_config_str("lower.kind = constant").is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let c = DomainSpec::<f32>::wavy_film(1.0).unwrap().derive_constants().unwrap();
        assert!((c.r + 0.5).abs() < 1e-6);
    }
}
