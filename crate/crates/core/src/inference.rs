//! Gaussian test results shared by the finite-threshold and limit estimators.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alternative {
    #[default]
    Two,
    Left,
    Right,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::Two => "two",
            Alternative::Left => "left",
            Alternative::Right => "right",
        })
    }
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "two" | "two-sided" => Ok(Alternative::Two),
            "left" | "less" => Ok(Alternative::Left),
            "right" | "greater" => Ok(Alternative::Right),
            other => Err(Error::param("alternative", format!("unknown alternative `{other}`"))),
        }
    }
}

/// Outcome of testing `ξ = 0` with a normal reference distribution.
///
/// `se` is the standard error of the estimate itself, so the statistic is
/// `estimate / se` and the interval is `estimate ± z·se`. When `se = 0` the
/// result is flagged degenerate: an exactly zero estimate is reported as the
/// null centre (`T = 0`, two-sided p-value 1); otherwise no statistic or
/// p-values are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub estimate: f64,
    pub se: f64,
    pub statistic: Option<f64>,
    pub p_left: Option<f64>,
    pub p_right: Option<f64>,
    pub p_two: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub alternative: Alternative,
    pub degenerate: bool,
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    Ok(())
}

impl TestResult {
    pub fn gaussian(estimate: f64, se: f64, level: f64, alternative: Alternative) -> Result<Self> {
        check_level(level)?;
        if !(se >= 0.0) || !estimate.is_finite() {
            return Err(Error::Numerical(format!(
                "invalid estimate/standard error pair ({estimate}, {se})"
            )));
        }
        let z = normal_quantile(1.0 - level / 2.0);
        let statistic = if se > 0.0 {
            Some(estimate / se)
        } else if estimate == 0.0 {
            Some(0.0)
        } else {
            None
        };
        let (p_left, p_right, p_two) = match statistic {
            Some(t) => {
                let (l, r) = (normal_cdf(t), normal_cdf(-t));
                (Some(l), Some(r), Some((2.0 * l.min(r)).min(1.0)))
            }
            None => (None, None, None),
        };
        Ok(Self {
            estimate,
            se,
            statistic,
            p_left,
            p_right,
            p_two,
            ci_low: estimate - z * se,
            ci_high: estimate + z * se,
            level,
            alternative,
            degenerate: se == 0.0,
        })
    }

    /// p-value of the chosen alternative.
    pub fn p_value(&self) -> Option<f64> {
        match self.alternative {
            Alternative::Two => self.p_two,
            Alternative::Left => self.p_left,
            Alternative::Right => self.p_right,
        }
    }

    pub fn rejects(&self) -> bool {
        self.p_value().is_some_and(|p| p < self.level)
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}
