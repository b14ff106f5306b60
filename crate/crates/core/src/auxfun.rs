//! Bounded odd link functions used to compress log-ratios into `[-1, 1]`.
//!
//! Every link is non-decreasing, odd, zero at the origin and tends to `±1`
//! at `±∞`. The clamp variant `clip(x / scale, -1, 1)` is the workhorse: with
//! `scale = d - 1` it serves as the tail-order link and with `scale = x*` as
//! the tail-order-parameter link.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxKind {
    Clamp,
    Arctan,
    NormalCdf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxFunction {
    kind: AuxKind,
    scale: f64,
}

impl AuxFunction {
    /// Piecewise-linear clamp `clip(x / scale, -1, 1)`.
    pub fn clamp(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("scale", format!("must be positive and finite, got {scale}")));
        }
        Ok(Self {
            kind: AuxKind::Clamp,
            scale,
        })
    }

    /// `(2/π)·arctan(x)`.
    pub fn arctan() -> Self {
        Self {
            kind: AuxKind::Arctan,
            scale: 1.0,
        }
    }

    /// `2(Φ(x) − 1/2)`.
    pub fn normal_cdf() -> Self {
        Self {
            kind: AuxKind::NormalCdf,
            scale: 1.0,
        }
    }

    pub fn kind(&self) -> AuxKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self.kind {
            AuxKind::Clamp => (x / self.scale).clamp(-1.0, 1.0),
            AuxKind::Arctan => FRAC_2_PI * x.atan(),
            AuxKind::NormalCdf => {
                // symmetric form keeps the link exactly odd
                if x < 0.0 {
                    -(2.0 * normal_cdf(-x) - 1.0)
                } else {
                    2.0 * normal_cdf(x) - 1.0
                }
            }
        }
    }

    /// Derivative of the link. At the clamp kinks `±scale` the interior slope
    /// `1/scale` is returned.
    pub fn derivative(&self, x: f64) -> f64 {
        match self.kind {
            AuxKind::Clamp => {
                if x.abs() <= self.scale {
                    1.0 / self.scale
                } else {
                    0.0
                }
            }
            AuxKind::Arctan => 2.0 / (PI * (1.0 + x * x)),
            AuxKind::NormalCdf => 2.0 * normal_pdf(x),
        }
    }

    /// `sup{x : h(x) ∈ (0, 1)}`: finite only for the clamp.
    pub fn saturation_point(&self) -> f64 {
        match self.kind {
            AuxKind::Clamp => self.scale,
            _ => f64::INFINITY,
        }
    }

    /// Whether `x` lies in the preimage of the open interval `(-1, 1)`.
    pub fn is_interior(&self, x: f64) -> bool {
        x.abs() < self.saturation_point()
    }
}

impl fmt::Display for AuxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AuxKind::Clamp => write!(f, "clamp({})", self.scale),
            AuxKind::Arctan => f.write_str("arctan"),
            AuxKind::NormalCdf => f.write_str("normcdf"),
        }
    }
}

impl FromStr for AuxFunction {
    type Err = Error;

    /// Accepts `clamp(1.5)`, `arctan` and `normcdf`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "arctan" => return Ok(Self::arctan()),
            "normcdf" => return Ok(Self::normal_cdf()),
            _ => {}
        }
        let inner = s
            .strip_prefix("clamp(")
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| Error::param("link", format!("unrecognised link function `{s}`")))?;
        let scale: f64 = inner
            .trim()
            .parse()
            .map_err(|_| Error::param("link", format!("bad clamp scale `{inner}`")))?;
        Self::clamp(scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn clamp_values() {
        let h = AuxFunction::clamp(1.5).unwrap();
        assert_eq!(h.evaluate(0.0), 0.0);
        assert_abs_diff_eq!(h.evaluate(0.75), 0.5, epsilon = 1e-15);
        assert_eq!(h.evaluate(2.0), 1.0);
        assert_eq!(h.evaluate(f64::NEG_INFINITY), -1.0);
    }

    #[test]
    fn clamp_rejects_bad_scale() {
        assert!(AuxFunction::clamp(0.0).is_err());
        assert!(AuxFunction::clamp(-1.0).is_err());
        assert!(AuxFunction::clamp(f64::NAN).is_err());
    }

    #[test]
    fn arctan_values() {
        let h = AuxFunction::arctan();
        assert_eq!(h.evaluate(0.0), 0.0);
        assert_abs_diff_eq!(h.evaluate(1.0), 0.5, epsilon = 1e-15);
        assert!((1.0 - h.evaluate(1e6)).abs() < 1e-5);
        assert_eq!(h.evaluate(f64::INFINITY), 1.0);
    }

    #[test]
    fn derivatives() {
        let h = AuxFunction::clamp(1.5).unwrap();
        assert_abs_diff_eq!(h.derivative(0.4), 1.0 / 1.5, epsilon = 1e-15);
        assert_eq!(h.derivative(3.0), 0.0);
        // kinks take the interior slope
        assert_eq!(h.derivative(1.5), 1.0 / 1.5);
        assert_eq!(h.derivative(-1.5), 1.0 / 1.5);
        assert_abs_diff_eq!(AuxFunction::arctan().derivative(0.0), std::f64::consts::FRAC_2_PI, epsilon = 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["clamp(1.5)", "arctan", "normcdf"] {
            let h: AuxFunction = s.parse().unwrap();
            assert_eq!(h.to_string(), s);
        }
        assert!("clamp(x)".parse::<AuxFunction>().is_err());
        assert!("tanh".parse::<AuxFunction>().is_err());
    }

    fn links() -> Vec<AuxFunction> {
        vec![
            AuxFunction::clamp(1.0).unwrap(),
            AuxFunction::clamp(0.37).unwrap(),
            AuxFunction::arctan(),
            AuxFunction::normal_cdf(),
        ]
    }

    #[test]
    fn oddness_on_many_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for h in links() {
            for _ in 0..10_000 {
                let x: f64 = rng.random_range(-20.0..20.0);
                let (a, b) = (h.evaluate(-x), -h.evaluate(x));
                if h.kind() == AuxKind::Clamp {
                    assert_eq!(a, b);
                } else {
                    assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(x in -50.0f64..50.0, dx in 0.0f64..10.0) {
            for h in links() {
                let (a, b) = (h.evaluate(x), h.evaluate(x + dx));
                prop_assert!(a <= b);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn derivative_matches_finite_difference(x in -6.0f64..6.0) {
            let step = 1e-6;
            for h in links() {
                if h.kind() == AuxKind::Clamp && (x.abs() - h.scale()).abs() < 1e-3 {
                    continue;
                }
                let fd = (h.evaluate(x + step) - h.evaluate(x - step)) / (2.0 * step);
                prop_assert!((fd - h.derivative(x)).abs() < 1e-6);
            }
        }
    }
}
