//! Estimation of the limit measure: Hill tail-order estimates on rank
//! maxima, their plug-in variances, and the `v_n`-threshold log-ratio.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::copulas::{column_ranks, row_maxima, PairedSample, Pairing};
use crate::error::{Error, Result};
use crate::inference::{Alternative, TestResult};
use crate::tail_theory::XiConfig;

/// Row maxima of the column ranks (`1..=n`, ties by first occurrence).
pub fn rank_maxima(x: ArrayView2<'_, f64>) -> Vec<usize> {
    column_ranks(x)
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillEstimate {
    pub kappa_hat: f64,
    pub k: usize,
    /// Plug-in asymptotic variance of `√k(κ̂ − κ)`, when computed.
    pub sigma2_hat: Option<f64>,
    /// The `(k+1)`-th smallest maximum.
    pub threshold: f64,
    /// The `k + 1` smallest maxima in ascending order.
    pub lower_order_stats: Vec<f64>,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 1 || k + 1 > n {
        return Err(Error::param("k", format!("need 1 <= k <= n-1 (n={n}), got {k}")));
    }
    Ok(())
}

/// `κ̂ = (k⁻¹ Σ_{j≤k} log(M_(k+1)/M_(j)))⁻¹` over ascending order statistics.
pub fn hill(maxima: &[f64], k: usize) -> Result<HillEstimate> {
    check_k(k, maxima.len())?;
    let mut lower = maxima.to_vec();
    if lower.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::Data("Hill estimator needs positive finite maxima".into()));
    }
    lower.select_nth_unstable_by(k, f64::total_cmp);
    lower.truncate(k + 1);
    lower.sort_by(f64::total_cmp);
    let top = lower[k];
    let log_sum: f64 = lower[..k].iter().map(|m| (top / m).ln()).sum();
    if !(log_sum > 0.0) {
        return Err(Error::Degenerate(format!(
            "the {k} smallest maxima all equal the ({})-th order statistic {top}",
            k + 1
        )));
    }
    Ok(HillEstimate {
        kappa_hat: k as f64 / log_sum,
        k,
        sigma2_hat: None,
        threshold: top,
        lower_order_stats: lower,
    })
}

/// Leading factor of the plug-in tail-order variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DraismaForm {
    /// `κ̂²`, matching the asymptotic variance `κ²(1−υ)(1−2υ∂₁p∂₂p)`.
    #[default]
    Squared,
    /// A single factor `κ̂`.
    AsPrinted,
}

impl FromStr for DraismaForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "squared" => Ok(DraismaForm::Squared),
            "as-printed" | "printed" => Ok(DraismaForm::AsPrinted),
            other => Err(Error::param("draisma", format!("unknown variance form `{other}`"))),
        }
    }
}

impl fmt::Display for DraismaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DraismaForm::Squared => "squared",
            DraismaForm::AsPrinted => "as-printed",
        })
    }
}

fn kth_smallest(mut values: Vec<f64>, k: usize) -> f64 {
    *values.select_nth_unstable_by(k, f64::total_cmp).1
}

/// Plug-in variance of the Hill tail-order estimate from bivariate ranks.
///
/// With `M` the `(k+1)`-th smallest rank maximum and `c = 1/(1 + M^{-1/4})`,
/// `M¹`/`M²` are the same order statistic after shrinking the first/second
/// rank by `c`, and
/// `σ̂² = κ̂^p (1 − k/M) {1 − 2k/√M (M/M¹ − 1)(M/M² − 1)}`.
pub fn draisma_variance(ranks: &Array2<usize>, k: usize, form: DraismaForm) -> Result<HillEstimate> {
    let (n, d) = ranks.dim();
    if d != 2 {
        return Err(Error::param("ranks", format!("tail-order variance needs bivariate ranks, got d={d}")));
    }
    check_k(k, n)?;
    let r: Vec<(f64, f64)> = ranks.rows().into_iter().map(|row| (row[0] as f64, row[1] as f64)).collect();
    let maxima: Vec<f64> = r.iter().map(|(a, b)| a.max(*b)).collect();
    let mut est = hill(&maxima, k)?;
    let m = est.threshold;
    let c = 1.0 / (1.0 + m.powf(-0.25));
    let m1 = kth_smallest(r.iter().map(|(a, b)| (a * c).max(*b)).collect(), k);
    let m2 = kth_smallest(r.iter().map(|(a, b)| a.max(b * c)).collect(), k);
    let kf = k as f64;
    let lead = match form {
        DraismaForm::Squared => est.kappa_hat * est.kappa_hat,
        DraismaForm::AsPrinted => est.kappa_hat,
    };
    let sigma2 = lead * (1.0 - kf / m) * (1.0 - 2.0 * kf / m.sqrt() * (m / m1 - 1.0) * (m / m2 - 1.0));
    if !sigma2.is_finite() {
        return Err(Error::Numerical(format!(
            "tail-order variance is not finite (kappa_hat={}, M={m}, M1={m1}, M2={m2}, k={k})",
            est.kappa_hat
        )));
    }
    est.sigma2_hat = Some(sigma2.max(0.0));
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    /// First `⌊n/2⌋` rows, then the rest.
    Halves,
    /// Odd rows (1-based), then even rows.
    Interleave,
}

impl FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "halves" => Ok(SplitStrategy::Halves),
            "interleave" => Ok(SplitStrategy::Interleave),
            other => Err(Error::param("split", format!("unknown split strategy `{other}`"))),
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitStrategy::Halves => "halves",
            SplitStrategy::Interleave => "interleave",
        })
    }
}

/// Row indices of the two parts of a split of `n` rows.
pub fn split_indices(n: usize, strategy: SplitStrategy) -> (Vec<usize>, Vec<usize>) {
    match strategy {
        SplitStrategy::Halves => ((0..n / 2).collect(), (n / 2..n).collect()),
        SplitStrategy::Interleave => ((0..n).step_by(2).collect(), (1..n).step_by(2).collect()),
    }
}

/// Splits the rows into two disjoint parts: the first part's `u1` block
/// feeds `C₁` statistics and the second part's `u2` block feeds `C₂`.
pub fn split_sample(sample: &PairedSample, strategy: SplitStrategy) -> Result<(PairedSample, PairedSample)> {
    let n = sample.n();
    if n < 4 {
        return Err(Error::param("sample", format!("splitting needs at least 4 rows, got {n}")));
    }
    let (a, b) = split_indices(n, strategy);
    let take = |m: &Array2<f64>, idx: &[usize]| m.select(ndarray::Axis(0), idx);
    let first = PairedSample {
        u1: take(&sample.u1, &a),
        u2: take(&sample.u2, &a),
        pairing: Pairing::Split,
        seed: sample.seed,
    };
    let second = PairedSample {
        u1: take(&sample.u1, &b),
        u2: take(&sample.u2, &b),
        pairing: Pairing::Split,
        seed: sample.seed,
    };
    Ok((first, second))
}

/// Standard-error regime of the limit estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeRegime {
    /// Tail-order term dominates; `m̃_n = k`.
    CaseI,
    /// Log-ratio term dominates; valid only for equal tail orders. `kappa`
    /// is the asserted common order and `tau = m_n/(n v_n^κ)`.
    CaseII { kappa: f64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    pub draisma: DraismaForm,
    pub regime: SeRegime,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            draisma: DraismaForm::Squared,
            regime: SeRegime::CaseI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub xi_hat: f64,
    pub kappa1_hat: f64,
    pub kappa2_hat: f64,
    pub sigma2_1: f64,
    pub sigma2_2: f64,
    pub alpha_vn: f64,
    pub v_n: f64,
    pub k: usize,
    /// Effective sample size of the reported standard error.
    pub m_tilde: f64,
    pub se: f64,
    pub regime: SeRegime,
    /// Block counts of maxima at or below `v_n`.
    pub counts: (usize, usize),
    /// Fewer than two maxima fell below `v_n` in some block.
    pub low_count: bool,
}

fn tail_fraction(maxima: &[f64], v: f64) -> (usize, f64) {
    let count = maxima.iter().filter(|m| **m <= v).count();
    (count, (1 + count) as f64 / maxima.len() as f64)
}

/// `ξ̂_w = (1−w)·h₁(κ̂₁ − κ̂₂) + w·h₂(α̂(v_n))` from two independent blocks.
pub fn xi_limit_hat(
    x1: ArrayView2<'_, f64>,
    x2: ArrayView2<'_, f64>,
    k: usize,
    v_n: f64,
    cfg: &XiConfig,
    options: &LimitOptions,
) -> Result<LimitEstimate> {
    if !(v_n > 0.0 && v_n < 1.0) {
        return Err(Error::param("v_n", format!("must lie in (0, 1), got {v_n}")));
    }
    let h1 = draisma_variance(&column_ranks(x1), k, options.draisma)?;
    let h2 = draisma_variance(&column_ranks(x2), k, options.draisma)?;
    let (c1, f1) = tail_fraction(&row_maxima(x1), v_n);
    let (c2, f2) = tail_fraction(&row_maxima(x2), v_n);
    let alpha = f2.ln() - f1.ln();
    let dk = h1.kappa_hat - h2.kappa_hat;
    let xi_hat = (1.0 - cfg.w) * cfg.h1.evaluate(dk) + cfg.w * cfg.h2.evaluate(alpha);
    let (s1, s2) = (h1.sigma2_hat.unwrap_or(0.0), h2.sigma2_hat.unwrap_or(0.0));
    let (se, m_tilde) = match options.regime {
        SeRegime::CaseI => {
            let kf = k as f64;
            ((1.0 - cfg.w) * cfg.h1.derivative(dk).abs() * ((s1 + s2) / kf).sqrt(), kf)
        }
        SeRegime::CaseII { kappa, tau } => {
            if !(kappa > 0.0 && tau > 0.0) {
                return Err(Error::param("regime", "case II needs positive kappa and tau"));
            }
            // τ·h₂'²·(1/λ̂₁ + 1/λ̂₂)/m_n with λ̂ = F̂(v)/v^κ and m_n = τ n v^κ
            let n1 = x1.nrows() as f64;
            let n2 = x2.nrows() as f64;
            let var = cfg.w.powi(2) * cfg.h2.derivative(alpha).powi(2) * (1.0 / (n1 * f1) + 1.0 / (n2 * f2));
            (var.sqrt(), tau * n1.min(n2) * v_n.powf(kappa))
        }
    };
    Ok(LimitEstimate {
        xi_hat,
        kappa1_hat: h1.kappa_hat,
        kappa2_hat: h2.kappa_hat,
        sigma2_1: s1,
        sigma2_2: s2,
        alpha_vn: alpha,
        v_n,
        k,
        m_tilde,
        se,
        regime: options.regime,
        counts: (c1, c2),
        low_count: c1 < 2 || c2 < 2,
    })
}

/// Limit estimate from a paired sample, optionally splitting rows first so
/// the two blocks come from disjoint observations.
pub fn xi_limit_hat_paired(
    sample: &PairedSample,
    split: Option<SplitStrategy>,
    k: usize,
    v_n: f64,
    cfg: &XiConfig,
    options: &LimitOptions,
) -> Result<LimitEstimate> {
    match split {
        Some(strategy) => {
            let (a, b) = split_sample(sample, strategy)?;
            xi_limit_hat(a.u1.view(), b.u2.view(), k, v_n, cfg, options)
        }
        None => xi_limit_hat(sample.u1.view(), sample.u2.view(), k, v_n, cfg, options),
    }
}

pub fn limit_test(est: &LimitEstimate, level: f64, alternative: Alternative) -> Result<TestResult> {
    TestResult::gaussian(est.xi_hat, est.se, level, alternative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, s};
    use proptest::prelude::*;

    #[test]
    fn rank_maxima_example() {
        let x = array![[0.1, 0.9], [0.5, 0.3], [0.9, 0.8]];
        assert_eq!(column_ranks(x.view()), array![[1, 3], [2, 1], [3, 2]]);
        assert_eq!(rank_maxima(x.view()), vec![3, 2, 3]);
        let one = array![[0.4], [0.1], [0.7]];
        assert_eq!(rank_maxima(one.view()), vec![2, 1, 3]);
    }

    #[test]
    fn hill_examples() {
        let m = [5.0, 3.0, 1.0, 4.0, 2.0];
        assert_abs_diff_eq!(hill(&m, 2).unwrap().kappa_hat, 1.329_718_805_885_022, epsilon = 1e-12);
        assert_abs_diff_eq!(hill(&m, 1).unwrap().kappa_hat, std::f64::consts::LOG2_E, epsilon = 1e-12);
        assert!(matches!(hill(&[2.0, 2.0, 2.0, 5.0], 2), Err(Error::Degenerate(_))));
        assert!(hill(&m, 5).is_err());
        assert!(hill(&m, 0).is_err());
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_indices(6, SplitStrategy::Halves), (vec![0, 1, 2], vec![3, 4, 5]));
        assert_eq!(split_indices(6, SplitStrategy::Interleave), (vec![0, 2, 4], vec![1, 3, 5]));
        for n in 4..30 {
            for s in [SplitStrategy::Halves, SplitStrategy::Interleave] {
                let (a, b) = split_indices(n, s);
                let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
                all.sort();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn draisma_coordinate_symmetry() {
        use crate::copulas::{sample, CopulaModel};
        let x = sample(&CopulaModel::Fgm { delta: 0.5 }, 2000, 4).unwrap();
        let swapped = x.slice(s![.., ..;-1]).to_owned();
        let a = draisma_variance(&column_ranks(x.view()), 60, DraismaForm::Squared).unwrap();
        let b = draisma_variance(&column_ranks(swapped.view()), 60, DraismaForm::Squared).unwrap();
        assert_abs_diff_eq!(a.sigma2_hat.unwrap(), b.sigma2_hat.unwrap(), epsilon = 1e-12);
        let p = draisma_variance(&column_ranks(x.view()), 60, DraismaForm::AsPrinted).unwrap();
        assert_abs_diff_eq!(a.sigma2_hat.unwrap(), p.sigma2_hat.unwrap() * a.kappa_hat, epsilon = 1e-12);
    }

    #[test]
    fn weight_zero_ignores_threshold() {
        use crate::copulas::{sample, CopulaModel};
        let x1 = sample(&CopulaModel::Fgm { delta: 0.0 }, 3000, 1).unwrap();
        let x2 = sample(&CopulaModel::Fgm { delta: 1.0 }, 3000, 2).unwrap();
        let cfg = XiConfig::clamps(0.0, 2, 1.5).unwrap();
        let o = LimitOptions::default();
        let a = xi_limit_hat(x1.view(), x2.view(), 100, 0.05, &cfg, &o).unwrap();
        let b = xi_limit_hat(x1.view(), x2.view(), 100, 0.3, &cfg, &o).unwrap();
        assert_eq!(a.xi_hat, b.xi_hat);
        assert_eq!(a.xi_hat, cfg.h1.evaluate(a.kappa1_hat - a.kappa2_hat));
        let swapped = xi_limit_hat(x2.view(), x1.view(), 100, 0.05, &XiConfig::clamps(0.5, 2, 1.5).unwrap(), &o).unwrap();
        let direct = xi_limit_hat(x1.view(), x2.view(), 100, 0.05, &XiConfig::clamps(0.5, 2, 1.5).unwrap(), &o).unwrap();
        assert_eq!(swapped.xi_hat, -direct.xi_hat);
    }

    #[test]
    fn null_center_test() {
        let est = LimitEstimate {
            xi_hat: 0.0,
            kappa1_hat: 2.0,
            kappa2_hat: 2.0,
            sigma2_1: 4.0,
            sigma2_2: 4.0,
            alpha_vn: 0.0,
            v_n: 0.1,
            k: 100,
            m_tilde: 100.0,
            se: 0.1,
            regime: SeRegime::CaseI,
            counts: (10, 10),
            low_count: false,
        };
        assert_eq!(limit_test(&est, 0.05, Alternative::Two).unwrap().p_two, Some(1.0));
    }

    #[test]
    fn low_count_flag() {
        let x = array![[0.5, 0.6], [0.7, 0.8], [0.9, 0.95], [0.55, 0.65], [0.75, 0.85]];
        let cfg = XiConfig::clamps(0.5, 2, 1.5).unwrap();
        let est = xi_limit_hat(x.view(), x.view(), 2, 0.01, &cfg, &LimitOptions::default()).unwrap();
        assert!(est.low_count);
        assert_eq!(est.xi_hat, 0.0);
    }

    proptest! {
        #[test]
        fn hill_scale_invariance(ms in proptest::collection::vec(0.01f64..100.0, 5..50), c in 0.001f64..1000.0) {
            let k = ms.len() / 2;
            let scaled: Vec<f64> = ms.iter().map(|m| m * c).collect();
            match (hill(&ms, k), hill(&scaled, k)) {
                (Ok(a), Ok(b)) => prop_assert!((a.kappa_hat - b.kappa_hat).abs() <= 1e-12 * a.kappa_hat.max(1.0)),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
