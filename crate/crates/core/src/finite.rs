//! Finite-threshold estimation: modified empirical CDFs of the diagonal
//! maxima, the empirical measure `ξ̂_w(u, v)`, its plug-in variances and tests.

use ndarray::Array2;

use crate::copulas::PairedSample;
use crate::error::{Error, Result};
use crate::inference::{Alternative, TestResult};
use crate::tail_theory::XiConfig;

/// Diagonal maxima of both blocks, sorted for counting, with the original
/// pairing retained for joint counts.
#[derive(Debug, Clone)]
pub struct EmpiricalTails {
    sorted1: Vec<f64>,
    sorted2: Vec<f64>,
    paired1: Vec<f64>,
    paired2: Vec<f64>,
    /// `max(M⁽¹⁾ᵢ, M⁽²⁾ᵢ)` sorted, so `Ĥ(u, u)` is a binary search.
    joint: Vec<f64>,
}

fn count_le(sorted: &[f64], u: f64) -> usize {
    sorted.partition_point(|&m| m <= u)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

impl EmpiricalTails {
    /// Row maxima of the two blocks, paired by index.
    pub fn new(m1: Vec<f64>, m2: Vec<f64>) -> Result<Self> {
        if m1.len() != m2.len() {
            return Err(Error::Data(format!("maxima have lengths {} and {}", m1.len(), m2.len())));
        }
        if m1.is_empty() {
            return Err(Error::Data("empty sample".into()));
        }
        if m1.iter().chain(&m2).any(|v| v.is_nan()) {
            return Err(Error::Data("maxima contain NaN".into()));
        }
        let joint: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| a.max(*b)).collect();
        Ok(Self {
            sorted1: sorted(&m1),
            sorted2: sorted(&m2),
            joint: sorted(&joint),
            paired1: m1,
            paired2: m2,
        })
    }

    pub fn from_sample(sample: &PairedSample) -> Self {
        Self::new(sample.maxima1(), sample.maxima2()).expect("paired sample blocks are validated")
    }

    pub fn n(&self) -> usize {
        self.paired1.len()
    }

    fn scaled(&self, count: usize) -> f64 {
        (1 + count) as f64 / self.n() as f64
    }

    /// `F̂₁(u) = (1 + #{M⁽¹⁾ ≤ u})/n`.
    pub fn f1(&self, u: f64) -> f64 {
        self.scaled(count_le(&self.sorted1, u))
    }

    pub fn f2(&self, u: f64) -> f64 {
        self.scaled(count_le(&self.sorted2, u))
    }

    /// `Ĥ(u, v) = (1 + #{M⁽¹⁾ ≤ u, M⁽²⁾ ≤ v})/n`.
    pub fn h(&self, u: f64, v: f64) -> f64 {
        if u == v {
            return self.scaled(count_le(&self.joint, u));
        }
        let count = self
            .paired1
            .iter()
            .zip(&self.paired2)
            .filter(|(a, b)| **a <= u && **b <= v)
            .count();
        self.scaled(count)
    }

    /// Numbers of maxima at or below `u` in each block.
    pub fn counts(&self, u: f64) -> (usize, usize) {
        (count_le(&self.sorted1, u), count_le(&self.sorted2, u))
    }

    pub fn swapped(&self) -> Self {
        Self {
            sorted1: self.sorted2.clone(),
            sorted2: self.sorted1.clone(),
            paired1: self.paired2.clone(),
            paired2: self.paired1.clone(),
            joint: self.joint.clone(),
        }
    }
}

pub fn empirical_cdfs(sample: &PairedSample) -> EmpiricalTails {
    EmpiricalTails::from_sample(sample)
}

fn check_threshold(name: &'static str, u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::param(name, format!("threshold must lie in (0, 1), got {u}")));
    }
    Ok(())
}

/// `α̂(u) = log(F̂₂(u)/F̂₁(u))`.
pub fn alpha_hat(tails: &EmpiricalTails, u: f64) -> f64 {
    tails.f2(u).ln() - tails.f1(u).ln()
}

/// `ξ̂_w(u, v) = (1−w)·h₁(α̂(u)/log(1/u)) + w·h₂(α̂(v))`.
pub fn xi_hat(tails: &EmpiricalTails, u: f64, v: f64, cfg: &XiConfig) -> Result<f64> {
    check_threshold("u", u)?;
    check_threshold("v", v)?;
    let order = cfg.h1.evaluate(alpha_hat(tails, u) / (1.0 / u).ln());
    Ok((1.0 - cfg.w) * order + cfg.w * cfg.h2.evaluate(alpha_hat(tails, v)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    /// `σ̂²_w(u) = â_w(u)²·Â(u)`.
    pub sigma2: f64,
    pub a_hat: f64,
    /// `Â(u)` after clipping at zero.
    pub big_a: f64,
    /// `Â(u)` was negative and has been clipped.
    pub clipped: bool,
}

impl VarianceEstimate {
    pub fn degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }
}

fn a_weight(tails: &EmpiricalTails, u: f64, cfg: &XiConfig) -> f64 {
    let alpha = alpha_hat(tails, u);
    let log_inv = (1.0 / u).ln();
    (1.0 - cfg.w) / log_inv * cfg.h1.derivative(alpha / log_inv) + cfg.w * cfg.h2.derivative(alpha)
}

fn big_a(tails: &EmpiricalTails, u: f64, v: f64) -> f64 {
    let (f1u, f1v, f2u, f2v) = (tails.f1(u), tails.f1(v), tails.f2(u), tails.f2(v));
    let lo = u.min(v);
    tails.f1(lo) / (f1u * f1v) + tails.f2(lo) / (f2u * f2v)
        - tails.h(u, v) / (f1u * f2v)
        - tails.h(v, u) / (f1v * f2u)
}

/// Plug-in estimate of the asymptotic variance of `√n·ξ̂_w(u)`.
pub fn sigma2_hat(tails: &EmpiricalTails, u: f64, cfg: &XiConfig) -> Result<VarianceEstimate> {
    check_threshold("u", u)?;
    let (f1, f2) = (tails.f1(u), tails.f2(u));
    let raw = 1.0 / f1 + 1.0 / f2 - 2.0 * tails.h(u, u) / (f1 * f2);
    let a_hat = a_weight(tails, u, cfg);
    let (big_a, clipped) = if raw < 0.0 { (0.0, true) } else { (raw, false) };
    Ok(VarianceEstimate {
        sigma2: a_hat * a_hat * big_a,
        a_hat,
        big_a,
        clipped,
    })
}

/// Plug-in covariance matrix of `√n·(ξ̂_w(u₁), …, ξ̂_w(u_m))`.
pub fn covariance_matrix(tails: &EmpiricalTails, thresholds: &[f64], cfg: &XiConfig) -> Result<Array2<f64>> {
    let m = thresholds.len();
    for &u in thresholds {
        check_threshold("thresholds", u)?;
    }
    let weights: Vec<f64> = thresholds.iter().map(|&u| a_weight(tails, u, cfg)).collect();
    let mut cov = Array2::zeros((m, m));
    for i in 0..m {
        cov[[i, i]] = sigma2_hat(tails, thresholds[i], cfg)?.sigma2;
        for j in i + 1..m {
            let value = weights[i] * weights[j] * big_a(tails, thresholds[i], thresholds[j]);
            cov[[i, j]] = value;
            cov[[j, i]] = value;
        }
    }
    Ok(cov)
}

/// Test of `ξ_w(u) = 0` at a single threshold (`u = v`).
pub fn finite_test(tails: &EmpiricalTails, u: f64, cfg: &XiConfig, level: f64) -> Result<TestResult> {
    let xi = xi_hat(tails, u, u, cfg)?;
    let var = sigma2_hat(tails, u, cfg)?;
    let se = (var.sigma2 / tails.n() as f64).sqrt();
    TestResult::gaussian(xi, se, level, Alternative::Two)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn three_point() -> EmpiricalTails {
        EmpiricalTails::new(vec![0.1, 0.5, 0.9], vec![0.2, 0.3, 0.8]).unwrap()
    }

    fn cfg() -> XiConfig {
        XiConfig::clamps(0.5, 2, 1.5).unwrap()
    }

    #[test]
    fn modified_cdfs() {
        let t = three_point();
        assert_abs_diff_eq!(t.f1(0.4), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.f1(1.0), 1.0 + 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.h(0.4, 0.4), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.h(0.95, 0.25), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.f1(0.05), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn three_point_oracles() {
        let t = three_point();
        assert_abs_diff_eq!(alpha_hat(&t, 0.4), 0.405_465_108_108_164_4, epsilon = 1e-12);
        let xi = xi_hat(&t, 0.4, 0.4, &cfg()).unwrap();
        assert_abs_diff_eq!(xi, 0.356_408_561, epsilon = 1e-9);
        let v = sigma2_hat(&t, 0.4, &cfg()).unwrap();
        assert_abs_diff_eq!(v.big_a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.a_hat, 0.879_011_667, epsilon = 1e-9);
        assert_abs_diff_eq!(v.sigma2, 0.386_330_756, epsilon = 1e-9);
        let r = finite_test(&t, 0.4, &cfg(), 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic.unwrap(), 0.993_182_623, epsilon = 1e-8);
        assert!(!r.degenerate);
        assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
    }

    #[test]
    fn identical_blocks_are_null() {
        let m = vec![0.3, 0.1, 0.7, 0.2, 0.9];
        let t = EmpiricalTails::new(m.clone(), m).unwrap();
        for u in [0.05, 0.15, 0.5, 0.95] {
            assert_eq!(xi_hat(&t, u, u, &cfg()).unwrap(), 0.0);
        }
        let r = finite_test(&t, 0.5, &cfg(), 0.05).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.statistic, Some(0.0));
        assert_eq!(r.p_two, Some(1.0));
    }

    #[test]
    fn weight_zero_ignores_h2() {
        let t = three_point();
        let a = XiConfig::clamps(0.0, 2, 1.5).unwrap();
        let b = XiConfig::clamps(0.0, 2, 0.1).unwrap();
        assert_eq!(xi_hat(&t, 0.4, 0.3, &a).unwrap(), xi_hat(&t, 0.4, 0.3, &b).unwrap());
    }

    #[test]
    fn flat_links_are_degenerate() {
        // α̂ = log 3 saturates both clamps
        let t = EmpiricalTails::new(vec![0.9, 0.9, 0.9], vec![0.1, 0.1, 0.9]).unwrap();
        let c = XiConfig::clamps(0.5, 2, 0.5).unwrap();
        let u = 0.5;
        assert!(alpha_hat(&t, u) / (1.0 / u).ln() > 1.0);
        let v = sigma2_hat(&t, u, &c).unwrap();
        assert_eq!(v.a_hat, 0.0);
        assert!(v.degenerate());
        let r = finite_test(&t, u, &c, 0.05).unwrap();
        assert!(r.degenerate && r.p_two.is_none());
    }

    #[test]
    fn covariance_diagonal_and_symmetry() {
        let m1: Vec<f64> = (0..200).map(|i| ((i * 37) % 199) as f64 / 200.0 + 0.001).collect();
        let m2: Vec<f64> = (0..200).map(|i| ((i * 53) % 197) as f64 / 198.0 + 0.002).collect();
        let t = EmpiricalTails::new(m1, m2).unwrap();
        let us = [0.1, 0.2, 0.35, 0.5];
        let cov = covariance_matrix(&t, &us, &cfg()).unwrap();
        for i in 0..us.len() {
            assert_eq!(cov[[i, i]], sigma2_hat(&t, us[i], &cfg()).unwrap().sigma2);
            for j in 0..us.len() {
                assert_eq!(cov[[i, j]], cov[[j, i]]);
            }
        }
    }

    fn maxima() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.001f64..0.999, n),
                proptest::collection::vec(0.001f64..0.999, n),
            )
        })
    }

    proptest! {
        #[test]
        fn swapping_negates_and_bounds((m1, m2) in maxima(), u in 0.01f64..0.99) {
            let t = EmpiricalTails::new(m1, m2).unwrap();
            let s = t.swapped();
            let c = cfg();
            let a = xi_hat(&t, u, u, &c).unwrap();
            prop_assert_eq!(a, -xi_hat(&s, u, u, &c).unwrap());
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert!(sigma2_hat(&t, u, &c).unwrap().sigma2 >= 0.0);
        }
    }
}
