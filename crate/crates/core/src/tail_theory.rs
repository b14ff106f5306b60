//! Closed-form limit of the tail-equivalence measure, its classification,
//! the FGM tail expansion and the asymptotic threshold schedules.

use std::fmt;

use crate::auxfun::AuxFunction;
use crate::error::{Error, Result};

/// Tail order `κ` and tail order parameter `λ` of a copula's diagonal,
/// `C(u,…,u) ~ λ u^κ` as `u ↓ 0`. `λ` may be `0` or `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailQuantities {
    pub kappa: f64,
    pub lambda: f64,
}

impl TailQuantities {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be finite and positive, got {kappa}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be in [0, inf], got {lambda}")));
        }
        Ok(Self { kappa, lambda })
    }
}

/// Second-order diagonal expansion `C(u,u) = λu^κ + θu^ν + o(u^ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailExpansion {
    pub lambda: f64,
    pub kappa: f64,
    pub theta: f64,
    pub nu: f64,
}

impl TailExpansion {
    pub fn new(lambda: f64, kappa: f64, theta: f64, nu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::DegenerateLambda(lambda));
        }
        if !(kappa > 0.0 && nu > kappa && nu.is_finite() && theta.is_finite()) {
            return Err(Error::param(
                "expansion",
                format!("need 0 < kappa < nu, got kappa={kappa}, nu={nu}"),
            ));
        }
        Ok(Self {
            lambda,
            kappa,
            theta,
            nu,
        })
    }

    pub fn tail_quantities(&self) -> TailQuantities {
        TailQuantities {
            kappa: self.kappa,
            lambda: self.lambda,
        }
    }
}

/// Weight and link functions of the measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiConfig {
    pub w: f64,
    pub h1: AuxFunction,
    pub h2: AuxFunction,
    pub d: usize,
}

impl XiConfig {
    pub fn new(w: f64, h1: AuxFunction, h2: AuxFunction, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::param("w", format!("must lie in [0, 1], got {w}")));
        }
        if d < 2 {
            return Err(Error::param("d", format!("dimension must be at least 2, got {d}")));
        }
        Ok(Self { w, h1, h2, d })
    }

    /// Clamp links: `h1 = clamp(d - 1)`, `h2 = clamp(x*)`.
    pub fn clamps(w: f64, d: usize, xstar: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::param("d", format!("dimension must be at least 2, got {d}")));
        }
        Self::new(
            w,
            AuxFunction::clamp((d - 1) as f64)?,
            AuxFunction::clamp(xstar)?,
            d,
        )
    }

    pub fn with_xstar(mut self, xstar: f64) -> Result<Self> {
        self.h2 = AuxFunction::clamp(xstar)?;
        Ok(self)
    }
}

/// Limit value of the measure given the tail quantities of both copulas.
pub fn xi_limit(tq1: &TailQuantities, tq2: &TailQuantities, cfg: &XiConfig) -> Result<f64> {
    let dk = tq1.kappa - tq2.kappa;
    let order_term = (1.0 - cfg.w) * cfg.h1.evaluate(dk);
    if dk != 0.0 {
        let sign = if dk > 0.0 { 1.0 } else { -1.0 };
        return Ok(order_term + cfg.w * sign);
    }
    let (l1, l2) = (tq1.lambda, tq2.lambda);
    if (l1 == 0.0 && l2 == 0.0) || (l1.is_infinite() && l2.is_infinite()) {
        return Err(Error::DegeneratePair {
            lambda1: l1,
            lambda2: l2,
        });
    }
    // ln λ2 − ln λ1 saturates to ±∞ when exactly one side is 0 or ∞
    let log_ratio = l2.ln() - l1.ln();
    Ok(order_term + cfg.w * cfg.h2.evaluate(log_ratio))
}

/// Which tail dominates, read off the value of the measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailRelation {
    /// `κ1 < κ2`: `ξ ∈ [-1, -w)`.
    Kappa1Smaller,
    /// `κ1 = κ2`, `λ1 > λ2`: `ξ ∈ [-w, 0)`.
    Lambda1Larger,
    /// `ξ = 0`.
    Equivalent,
    /// `κ1 = κ2`, `λ1 < λ2`: `ξ ∈ (0, w]`.
    Lambda2Larger,
    /// `κ1 > κ2`: `ξ ∈ (w, 1]`.
    Kappa1Larger,
}

impl TailRelation {
    /// Relation implied directly by the tail quantities.
    pub fn from_quantities(tq1: &TailQuantities, tq2: &TailQuantities) -> Self {
        use std::cmp::Ordering::*;
        match tq1.kappa.total_cmp(&tq2.kappa) {
            Less => Self::Kappa1Smaller,
            Greater => Self::Kappa1Larger,
            Equal => match tq1.lambda.total_cmp(&tq2.lambda) {
                Greater => Self::Lambda1Larger,
                Less => Self::Lambda2Larger,
                Equal => Self::Equivalent,
            },
        }
    }
}

impl fmt::Display for TailRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Kappa1Smaller => "C2-stronger-order",
            Self::Lambda1Larger => "equal-order-C1-stronger-param",
            Self::Equivalent => "tail-equivalent",
            Self::Lambda2Larger => "equal-order-C2-stronger-param",
            Self::Kappa1Larger => "C1-stronger-order",
        })
    }
}

pub fn classify(xi: f64, w: f64) -> Result<TailRelation> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(Error::param("xi", format!("must lie in [-1, 1], got {xi}")));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::param("w", format!("must lie in [0, 1], got {w}")));
    }
    Ok(if xi < -w {
        TailRelation::Kappa1Smaller
    } else if xi < 0.0 {
        TailRelation::Lambda1Larger
    } else if xi == 0.0 {
        TailRelation::Equivalent
    } else if xi <= w {
        TailRelation::Lambda2Larger
    } else {
        TailRelation::Kappa1Larger
    })
}

/// Diagonal expansion of the FGM copula, `(1+δ)u² − 2δu³ + δu⁴`.
pub fn fgm_tail_expansion(delta: f64) -> Result<TailExpansion> {
    if !(-1.0..=1.0).contains(&delta) {
        return Err(Error::param("delta", format!("must lie in [-1, 1], got {delta}")));
    }
    if delta == -1.0 {
        return Err(Error::DegenerateLambda(0.0));
    }
    TailExpansion::new(1.0 + delta, 2.0, -2.0 * delta, 3.0)
}

/// Exponent `constant + eps_coeff·ε`, kept in symbolic form so schedules can
/// be compared without rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineExponent {
    pub constant: f64,
    pub eps_coeff: f64,
}

impl AffineExponent {
    pub fn at(&self, epsilon: f64) -> f64 {
        self.constant + self.eps_coeff * epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSchedule {
    pub v_n: f64,
    pub m_n: f64,
    pub epsilon: f64,
    pub tau: f64,
    /// `v_n = n^{v_exponent(ε)}`
    pub v_exponent: AffineExponent,
    /// `m_n = n^{m_exponent(ε)}`
    pub m_exponent: AffineExponent,
}

/// Open interval of admissible `ε` for the `(v_n, m_n)` schedule.
///
/// `e2` must carry the larger tail order. The standing assumption
/// `ν1 ≥ ν2` or `ν1 < ν2 < κ2 + 3ν1` is enforced; outside it the schedule is
/// reported as unavailable.
pub fn epsilon_interval(e1: &TailExpansion, e2: &TailExpansion) -> Result<(f64, f64)> {
    if e2.kappa < e1.kappa {
        return Err(Error::param(
            "expansions",
            format!(
                "the larger tail order must be passed second (kappa1={}, kappa2={})",
                e1.kappa, e2.kappa
            ),
        ));
    }
    let (k2, nu1, nu2) = (e2.kappa, e1.nu, e2.nu);
    if !(nu1 >= nu2 || nu2 < k2 + 3.0 * nu1) {
        return Err(Error::EmptyEpsilonInterval(format!(
            "requires nu1 >= nu2 or nu2 < kappa2 + 3 nu1 (nu1={nu1}, nu2={nu2}, kappa2={k2})"
        )));
    }
    let lower = (1.0 / (k2 + 2.0 * nu1) - 1.0 / (k2 + 2.0 * nu2)).max(0.0);
    let upper = 2.0 * nu2 / (k2 * (k2 + 2.0 * nu2));
    if lower >= upper {
        return Err(Error::EmptyEpsilonInterval(format!("({lower}, {upper}) is empty")));
    }
    Ok((lower, upper))
}

/// `v_n = n^{-1/(κ2+2ν2) - ε}`, `m_n = n^{1 - κ2(ε + 1/(κ2+2ν2))}` with `τ = 1`.
pub fn threshold_schedule(e1: &TailExpansion, e2: &TailExpansion, n: usize, epsilon: f64) -> Result<ThresholdSchedule> {
    let (lower, upper) = epsilon_interval(e1, e2)?;
    if !(epsilon > lower && epsilon < upper) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in ({lower}, {upper}), got {epsilon}"),
        ));
    }
    if n < 2 {
        return Err(Error::param("n", "sample size must be at least 2"));
    }
    let k2 = e2.kappa;
    let base = 1.0 / (k2 + 2.0 * e2.nu);
    let v_exponent = AffineExponent {
        constant: -base,
        eps_coeff: -1.0,
    };
    let m_exponent = AffineExponent {
        constant: 1.0 - k2 * base,
        eps_coeff: -k2,
    };
    let nf = n as f64;
    Ok(ThresholdSchedule {
        v_n: nf.powf(v_exponent.at(epsilon)),
        m_n: nf.powf(m_exponent.at(epsilon)),
        epsilon,
        tau: 1.0,
        v_exponent,
        m_exponent,
    })
}

/// Hill sample fraction `k = ⌊n^{2τ̃/(2τ̃+κ) − ε}⌋`, clipped to `[1, n-1]`.
pub fn hill_k_schedule(tau_tilde: f64, kappa: f64, epsilon: f64, n: usize) -> Result<usize> {
    if !(tau_tilde >= 0.0 && kappa > 0.0) {
        return Err(Error::param("tau_tilde", "need tau_tilde >= 0 and kappa > 0"));
    }
    if n < 2 {
        return Err(Error::param("n", "sample size must be at least 2"));
    }
    let bound = 2.0 * tau_tilde / (2.0 * tau_tilde + kappa);
    if !(epsilon > 0.0 && epsilon < bound) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in (0, {bound}), got {epsilon}"),
        ));
    }
    let k = (n as f64).powf(bound - epsilon).floor() as usize;
    Ok(k.clamp(1, n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> XiConfig {
        XiConfig::clamps(0.5, 2, 1.5).unwrap()
    }

    fn tq(k: f64, l: f64) -> TailQuantities {
        TailQuantities::new(k, l).unwrap()
    }

    #[test]
    fn equal_tails_give_zero() {
        assert_eq!(xi_limit(&tq(2.0, 1.5), &tq(2.0, 1.5), &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn fgm_pair_value() {
        let a = fgm_tail_expansion(0.0).unwrap().tail_quantities();
        let b = fgm_tail_expansion(1.0).unwrap().tail_quantities();
        let xi = xi_limit(&a, &b, &cfg()).unwrap();
        assert_abs_diff_eq!(xi, 0.231_049_060_186_648_4, epsilon = 1e-12);
    }

    #[test]
    fn extreme_orders_reach_one() {
        let c = XiConfig::clamps(0.5, 2, 1.5).unwrap();
        assert_eq!(xi_limit(&tq(2.0, 1.0), &tq(1.0, 0.3), &c).unwrap(), 1.0);
        assert_eq!(xi_limit(&tq(1.0, 1.0), &tq(2.0, 0.3), &c).unwrap(), -1.0);
    }

    #[test]
    fn excluded_pairs() {
        assert!(matches!(
            xi_limit(&tq(1.5, 0.0), &tq(1.5, 0.0), &cfg()),
            Err(Error::DegeneratePair { .. })
        ));
        assert!(matches!(
            xi_limit(&tq(1.5, f64::INFINITY), &tq(1.5, f64::INFINITY), &cfg()),
            Err(Error::DegeneratePair { .. })
        ));
        // one extreme side saturates h2
        assert_eq!(xi_limit(&tq(1.5, 0.0), &tq(1.5, 2.0), &cfg()).unwrap(), 0.5);
        assert_eq!(xi_limit(&tq(1.5, f64::INFINITY), &tq(1.5, 2.0), &cfg()).unwrap(), -0.5);
    }

    #[test]
    fn classification_buckets() {
        assert_eq!(classify(0.0, 0.5).unwrap(), TailRelation::Equivalent);
        assert_eq!(classify(0.7, 0.5).unwrap(), TailRelation::Kappa1Larger);
        assert_eq!(classify(-0.3, 0.5).unwrap(), TailRelation::Lambda1Larger);
        assert_eq!(classify(0.5, 0.5).unwrap(), TailRelation::Lambda2Larger);
        assert_eq!(classify(-0.5, 0.5).unwrap(), TailRelation::Lambda1Larger);
        assert_eq!(classify(-0.51, 0.5).unwrap(), TailRelation::Kappa1Smaller);
        assert!(classify(1.2, 0.5).is_err());
        assert_eq!(TailRelation::Kappa1Larger.to_string(), "C1-stronger-order");
    }

    #[test]
    fn fgm_expansion() {
        assert_eq!(fgm_tail_expansion(0.0).unwrap(), TailExpansion { lambda: 1.0, kappa: 2.0, theta: 0.0, nu: 3.0 });
        let e = fgm_tail_expansion(1.0).unwrap();
        assert_eq!((e.lambda, e.kappa, e.theta, e.nu), (2.0, 2.0, -2.0, 3.0));
        let e = fgm_tail_expansion(-0.5).unwrap();
        assert_eq!((e.lambda, e.kappa, e.theta, e.nu), (0.5, 2.0, 1.0, 3.0));
        assert!(matches!(fgm_tail_expansion(-1.0), Err(Error::DegenerateLambda(_))));
        assert!(fgm_tail_expansion(1.5).is_err());
    }

    #[test]
    fn fgm_schedule() {
        let e = fgm_tail_expansion(0.3).unwrap();
        let (lo, hi) = epsilon_interval(&e, &e).unwrap();
        assert_eq!((lo, hi), (0.0, 0.375));
        let s = threshold_schedule(&e, &e, 10_000, 0.1).unwrap();
        assert_abs_diff_eq!(s.v_n, 10f64.powf(-0.9), epsilon = 1e-12);
        assert_abs_diff_eq!(s.m_n, 10f64.powf(2.2), epsilon = 1e-9);
        assert_eq!(s.m_exponent, AffineExponent { constant: 0.75, eps_coeff: -2.0 });
        assert_eq!(s.tau, 1.0);
        assert!(threshold_schedule(&e, &e, 10_000, 0.0).is_err());
        assert!(threshold_schedule(&e, &e, 10_000, 0.375).is_err());
    }

    #[test]
    fn schedule_assumption_violation() {
        let e1 = TailExpansion::new(1.0, 2.0, 1.0, 2.5).unwrap();
        let e2 = TailExpansion::new(1.0, 2.0, 1.0, 4.0).unwrap();
        // nu1 = 2.5 -> kappa2 + 3 nu1 = 9.5 > 4: fine
        assert!(epsilon_interval(&e1, &e2).is_ok());
        // nu1 = 0.5 is below kappa; build the raw struct for the assumption check
        let e1 = TailExpansion { lambda: 1.0, kappa: 0.4, theta: 1.0, nu: 0.5 };
        assert!(matches!(epsilon_interval(&e1, &e2), Err(Error::EmptyEpsilonInterval(_))));
    }

    #[test]
    fn schedule_requires_larger_order_second() {
        let small = TailExpansion::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let large = TailExpansion::new(1.0, 2.0, 1.0, 3.0).unwrap();
        assert!(epsilon_interval(&large, &small).is_err());
        assert!(epsilon_interval(&small, &large).is_ok());
    }

    #[test]
    fn hill_schedule() {
        assert_eq!(hill_k_schedule(1.0, 2.0, 0.1, 10_000).unwrap(), 39);
        assert_eq!(hill_k_schedule(1.0, 2.0, 0.499, 10).unwrap(), 1);
        assert!(hill_k_schedule(1.0, 2.0, 0.5, 10_000).is_err());
        assert!(hill_k_schedule(0.0, 2.0, 0.1, 10_000).is_err());
    }

    fn admissible() -> impl Strategy<Value = (TailQuantities, TailQuantities)> {
        let kappa = prop_oneof![Just(1.0), Just(1.5), Just(2.0), 1.0f64..2.0];
        let lambda = prop_oneof![Just(0.0), Just(f64::INFINITY), 0.01f64..10.0];
        (kappa.clone(), lambda.clone(), kappa, lambda)
            .prop_filter("excluded pair", |(k1, l1, k2, l2)| {
                !(k1 == k2 && ((*l1 == 0.0 && *l2 == 0.0) || (l1.is_infinite() && l2.is_infinite())))
            })
            .prop_map(|(k1, l1, k2, l2)| (tq(k1, l1), tq(k2, l2)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn antisymmetric((a, b) in admissible(), w in 0.0f64..=1.0) {
            let c = XiConfig::clamps(w, 2, 1.5).unwrap();
            prop_assert_eq!(xi_limit(&a, &b, &c).unwrap(), -xi_limit(&b, &a, &c).unwrap());
        }

        #[test]
        fn bucket_matches_quantities((a, b) in admissible(), w in 0.01f64..0.99) {
            let c = XiConfig::clamps(w, 2, 1.5).unwrap();
            let xi = xi_limit(&a, &b, &c).unwrap();
            prop_assert_eq!(classify(xi, w).unwrap(), TailRelation::from_quantities(&a, &b));
        }
    }
}
