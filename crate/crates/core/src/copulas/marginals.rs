//! Marginal distributions of the skew-normal and skew-t constructions.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{integrate, invert_increasing, normal_cdf};

const TAIL_QUAD_TOL: f64 = 1e-13;
const SKEW_T_TOL: f64 = 1e-8;

fn owens_t_integral(h: f64, a: f64) -> f64 {
    // a in (0, 1]; the integrand is bounded and smooth on [0, a]
    let hh = 0.5 * h * h;
    let f = |x: f64| {
        let s = 1.0 + x * x;
        (-hh * s).exp() / s
    };
    match integrate(f, 0.0, a, TAIL_QUAD_TOL, 400) {
        Ok(r) => r.value / (2.0 * PI),
        // smooth integrand on a short interval; fall back to the last estimate
        Err(_) => crate::numeric::gk15(&f, 0.0, a).0 / (2.0 * PI),
    }
}

/// Owen's T function `T(h, a) = (1/2π) ∫₀ᵃ exp(-h²(1+x²)/2) / (1+x²) dx`.
pub fn owens_t(h: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if a < 0.0 {
        return -owens_t(h, -a);
    }
    let h = h.abs();
    if h == 0.0 {
        return a.atan() / (2.0 * PI);
    }
    if a.is_infinite() {
        return 0.5 * (1.0 - normal_cdf(h));
    }
    if h > 40.0 {
        return 0.0;
    }
    if a <= 1.0 {
        return owens_t_integral(h, a);
    }
    // T(h,a) + T(ah,1/a) = ½Φ(h)Q(ah) + ½Φ(ah)Q(h) for h ≥ 0, a > 0
    let ah = a * h;
    let (ph, pah) = (normal_cdf(h), normal_cdf(ah));
    let (qh, qah) = (normal_cdf(-h), normal_cdf(-ah));
    let rest = if ah > 40.0 { 0.0 } else { owens_t_integral(ah, 1.0 / a) };
    0.5 * (ph * qah + pah * qh) - rest
}

/// Shape parameter `α = δ/√(1−δ²)` of the margin `δ|Z₀| + √(1−δ²)Z`.
pub fn shape_from_delta(delta: f64) -> f64 {
    delta / (1.0 - delta * delta).sqrt()
}

pub fn skew_normal_cdf(x: f64, alpha: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    (normal_cdf(x) - 2.0 * owens_t(x, alpha)).clamp(0.0, 1.0)
}

pub fn skew_normal_quantile(p: f64, alpha: f64) -> Result<f64> {
    check_probability(p)?;
    invert_increasing(|x| Ok(skew_normal_cdf(x, alpha)), p, -40.0, 40.0, 1e-14)
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("probability must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Density `2 t_ν(x) T_{ν+1}(αx √((ν+1)/(ν+x²)))` of the skew-t margin.
pub struct SkewT {
    alpha: f64,
    nu: f64,
    log_norm: f64,
    outer: StudentsT,
}

impl SkewT {
    pub fn new(alpha: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::param("nu", format!("degrees of freedom must be positive, got {nu}")));
        }
        if !alpha.is_finite() {
            return Err(Error::param("alpha", "shape must be finite"));
        }
        let log_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
        let outer = StudentsT::new(0.0, 1.0, nu + 1.0).map_err(|e| Error::param("nu", e.to_string()))?;
        Ok(Self {
            alpha,
            nu,
            log_norm,
            outer,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let nu = self.nu;
        let t = (self.log_norm - 0.5 * (nu + 1.0) * (1.0 + x * x / nu).ln()).exp();
        if self.alpha == 0.0 {
            return t;
        }
        let arg = self.alpha * x * ((nu + 1.0) / (nu + x * x)).sqrt();
        2.0 * t * self.outer.cdf(arg)
    }

    /// `P(X ≤ 0) = 1/2 − arctan(α)/π`.
    pub fn cdf_at_zero(&self) -> f64 {
        0.5 - self.alpha.atan() / PI
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Numerical("skew-t cdf at NaN".into()));
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        if x == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let part = self.segment(0.0, x)?;
        Ok((self.cdf_at_zero() + part).clamp(0.0, 1.0))
    }

    /// Signed integral of the density from `a` to `b`.
    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        // x = tan θ maps the heavy-tailed integrand onto a bounded interval
        let integrand = |theta: f64| {
            let c = theta.cos();
            self.pdf(theta.tan()) / (c * c)
        };
        let r = integrate(integrand, lo.atan(), hi.atan(), SKEW_T_TOL * 1e-2, 4000)
            .map_err(|e| Error::Numerical(format!("skew-t cdf (alpha={}, nu={}): {e}", self.alpha, self.nu)))?;
        Ok(sign * r.value)
    }

    /// CDF at many points, integrating only between neighbouring sorted points.
    pub fn cdf_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        if xs.iter().any(|x| x.is_nan()) {
            return Err(Error::Numerical("skew-t cdf at NaN".into()));
        }
        order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
        let split = order.partition_point(|&i| xs[i] < 0.0);
        let mut out = vec![0.0; xs.len()];
        let f0 = self.cdf_at_zero();
        // walk upwards from zero through the non-negative points
        let (mut acc, mut prev) = (f0, 0.0);
        for &i in &order[split..] {
            let x = xs[i];
            if x.is_infinite() {
                out[i] = 1.0;
                continue;
            }
            acc += self.segment(prev, x)?;
            prev = x;
            out[i] = acc.clamp(0.0, 1.0);
        }
        // and downwards through the negative ones
        let (mut acc, mut prev) = (f0, 0.0);
        for &i in order[..split].iter().rev() {
            let x = xs[i];
            if x.is_infinite() {
                out[i] = 0.0;
                continue;
            }
            acc -= self.segment(x, prev)?;
            prev = x;
            out[i] = acc.clamp(0.0, 1.0);
        }
        Ok(out)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo)? > p {
            lo *= 2.0;
            if lo < -1e12 {
                return Err(Error::Numerical(format!("skew-t quantile {p} not bracketed")));
            }
        }
        while self.cdf(hi)? < p {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numerical(format!("skew-t quantile {p} not bracketed")));
            }
        }
        invert_increasing(|x| self.cdf(x), p, lo, hi, 1e-12)
    }
}

pub fn skew_t_cdf(x: f64, alpha: f64, nu: f64) -> Result<f64> {
    SkewT::new(alpha, nu)?.cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn owens_t_identities() {
        for h in [-3.0, -0.4, 0.0, 0.7, 2.5, 9.0] {
            assert_eq!(owens_t(h, 0.0), 0.0);
            let phi = normal_cdf(h);
            assert_abs_diff_eq!(owens_t(h, 1.0), 0.5 * phi * (1.0 - phi), epsilon = 1e-12);
        }
        for a in [-5.0, -1.0, 0.3, 1.0, 7.0] {
            assert_abs_diff_eq!(owens_t(0.0, a), f64::atan(a) / (2.0 * PI), epsilon = 1e-15);
        }
    }

    #[test]
    fn owens_t_reference_values() {
        // values from an independent high-precision evaluation
        assert_abs_diff_eq!(owens_t(0.5, 0.5), 0.064_488_602_847_503_76, epsilon = 1e-12);
        assert_abs_diff_eq!(owens_t(1.0, 2.0), 0.078_468_186_993_084_1, epsilon = 1e-12);
        assert_abs_diff_eq!(owens_t(2.0, 0.25), 0.005_068_174_277_162_414, epsilon = 1e-12);
        assert_abs_diff_eq!(owens_t(0.3, 10.0), 0.191_029_839_076_53, epsilon = 1e-12);
    }

    #[test]
    fn skew_normal_reduces_to_normal() {
        for x in [-2.0, -0.1, 0.0, 1.3] {
            assert_abs_diff_eq!(skew_normal_cdf(x, 0.0), normal_cdf(x), epsilon = 1e-15);
        }
        for alpha in [-3.0, -0.5, 0.75, 4.0] {
            assert_abs_diff_eq!(skew_normal_cdf(0.0, alpha), 0.5 - f64::atan(alpha) / PI, epsilon = 1e-14);
        }
    }

    #[test]
    fn skew_normal_quantile_round_trip() {
        for p in [1e-6, 0.01, 0.3, 0.5, 0.97] {
            let x = skew_normal_quantile(p, -0.87).unwrap();
            assert_abs_diff_eq!(skew_normal_cdf(x, -0.87), p, epsilon = 1e-12);
        }
    }

    #[test]
    fn skew_t_reduces_to_student() {
        let st = SkewT::new(0.0, 5.0).unwrap();
        let t = StudentsT::new(0.0, 1.0, 5.0).unwrap();
        for x in [-30.0, -2.0, 0.0, 0.4, 3.0, 100.0] {
            assert_abs_diff_eq!(st.cdf(x).unwrap(), t.cdf(x), epsilon = 1e-9);
        }
    }

    #[test]
    fn skew_t_reference_value() {
        // independent quadrature of the density in extended precision
        assert_abs_diff_eq!(skew_t_cdf(1.2, 0.75, 5.0).unwrap(), 0.758_208_492_583, epsilon = 1e-8);
    }

    #[test]
    fn skew_t_batch_matches_pointwise() {
        let st = SkewT::new(0.75, 5.0).unwrap();
        let xs = [3.0, -0.2, 0.0, -7.5, 1.2, 40.0, 0.01, -0.01];
        let batch = st.cdf_many(&xs).unwrap();
        for (x, b) in xs.iter().zip(batch) {
            assert_abs_diff_eq!(st.cdf(*x).unwrap(), b, epsilon = 1e-10);
        }
        let q = st.quantile(0.9).unwrap();
        assert_abs_diff_eq!(st.cdf(q).unwrap(), 0.9, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn owens_t_symmetries(h in -8.0f64..8.0, a in -6.0f64..6.0) {
            prop_assert_eq!(owens_t(h, a), owens_t(-h, a));
            prop_assert_eq!(owens_t(h, -a), -owens_t(h, a));
        }

        #[test]
        fn skew_normal_cdf_monotone(x in -8.0f64..8.0, dx in 0.0f64..1.0, alpha in -4.0f64..4.0) {
            prop_assert!(skew_normal_cdf(x, alpha) <= skew_normal_cdf(x + dx, alpha) + 1e-13);
        }
    }
}
