//! Monte Carlo validation studies: coverage and size of the tests, validity
//! of the plug-in variance, and the exact moments of the empirical tail
//! functions.

use rayon::prelude::*;

use crate::copulas::{CopulaModel, PairedSample};
use crate::error::{Error, Result};
use crate::finite::{finite_test, sigma2_hat, xi_hat, EmpiricalTails};
use crate::inference::{Alternative, TestResult};
use crate::io::{Cell, Table};
use crate::limit::{limit_test, xi_limit_hat, DraismaForm, LimitOptions, SeRegime};
use crate::numeric::{mean, variance};
use crate::rng::{substream, StreamRng};
use crate::stats::{anderson_darling_normal, proportion_se, AD_CRITICAL_1PCT};
use crate::tail_theory::{fgm_tail_expansion, xi_limit, TailQuantities, XiConfig};

use super::reference::oracle_xi_finite;
use super::LIBRARY;

/// How the two blocks of a simulated paired sample are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum PairDesign {
    /// Independent draws from `C₁` and `C₂`.
    Independent(CopulaModel, CopulaModel),
    /// Draws `U` from `C` paired with `1 − U`, so `C₂` is the survival copula.
    Countermonotone(CopulaModel),
}

impl PairDesign {
    pub fn models(&self) -> (CopulaModel, CopulaModel) {
        match self {
            PairDesign::Independent(a, b) => (a.clone(), b.clone()),
            PairDesign::Countermonotone(c) => (c.clone(), c.clone().survival()),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<PairedSample> {
        match self {
            PairDesign::Independent(a, b) => PairedSample::independent(a, b, n, rng),
            PairDesign::Countermonotone(c) => PairedSample::countermonotone(c, n, rng),
        }
    }

    /// `H(u, v) = P(M⁽¹⁾ ≤ u, M⁽²⁾ ≤ v)` where closed forms exist.
    pub fn joint(&self, u: f64, v: f64) -> Option<f64> {
        match self {
            PairDesign::Independent(a, b) => Some(a.diagonal(u)? * b.diagonal(v)?),
            PairDesign::Countermonotone(c) => {
                // M⁽²⁾ ≤ v means every coordinate of U is at least 1 − v
                let lo = 1.0 - v;
                if lo >= u {
                    return Some(0.0);
                }
                let d = c.dim();
                let mut total = 0.0;
                let mut point = vec![0.0; d];
                for mask in 0u32..(1 << d) {
                    for (j, p) in point.iter_mut().enumerate() {
                        *p = if mask & (1 << j) != 0 { lo } else { u };
                    }
                    let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    total += sign * c.cdf(&point)?;
                }
                Some(total)
            }
        }
    }

    fn describe(&self) -> (String, String, &'static str) {
        let (a, b) = self.models();
        let kind = match self {
            PairDesign::Independent(..) => "independent",
            PairDesign::Countermonotone(_) => "countermonotone",
        };
        (a.to_string(), b.to_string(), kind)
    }
}

/// Tail order and tail order parameter where they are known in closed form.
pub fn known_tail_quantities(model: &CopulaModel) -> Option<TailQuantities> {
    match model {
        CopulaModel::Independence { d } => TailQuantities::new(*d as f64, 1.0).ok(),
        CopulaModel::Fgm { delta } => fgm_tail_expansion(*delta).ok().map(|e| e.tail_quantities()),
        // both families are radially symmetric
        CopulaModel::Survival(inner) if matches!(**inner, CopulaModel::Independence { .. } | CopulaModel::Fgm { .. }) => known_tail_quantities(inner),
        _ => None,
    }
}

/// Threshold choice of a coverage study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSpec {
    /// Finite-threshold test at `u`.
    Finite { u: f64 },
    /// Limit test with `k` order statistics and tail threshold `v`.
    Limit { k: usize, v: f64, regime: SeRegime },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSetup {
    pub design: PairDesign,
    pub n: usize,
    pub reps: usize,
    pub level: f64,
    pub threshold: ThresholdSpec,
    pub cfg: XiConfig,
    pub seed: u64,
    pub draisma: DraismaForm,
    /// Value the intervals should cover; derived from closed forms when absent.
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub truth: Option<f64>,
    pub reps: usize,
    /// Fraction of intervals containing the truth.
    pub coverage: Option<f64>,
    /// Rejection frequencies of the two-sided, left and right tests.
    pub reject_two: f64,
    pub reject_left: f64,
    pub reject_right: f64,
    pub degenerate: usize,
    pub results: Vec<TestResult>,
    pub table: Table,
}

impl CoverageSetup {
    fn truth(&self) -> Option<f64> {
        if self.truth.is_some() {
            return self.truth;
        }
        let (a, b) = self.design.models();
        match self.threshold {
            ThresholdSpec::Finite { u } => oracle_xi_finite(&a, &b, u, &self.cfg),
            ThresholdSpec::Limit { .. } => xi_limit(&known_tail_quantities(&a)?, &known_tail_quantities(&b)?, &self.cfg).ok(),
        }
    }

    fn one(&self, rep: usize) -> Result<TestResult> {
        let mut rng = substream(self.seed, rep as u64);
        let sample = self.design.sample(self.n, &mut rng)?;
        match self.threshold {
            ThresholdSpec::Finite { u } => finite_test(&EmpiricalTails::from_sample(&sample), u, &self.cfg, self.level),
            ThresholdSpec::Limit { k, v, regime } => {
                let options = LimitOptions { draisma: self.draisma, regime };
                let est = xi_limit_hat(sample.u1.view(), sample.u2.view(), k, v, &self.cfg, &options)?;
                limit_test(&est, self.level, Alternative::Two)
            }
        }
    }
}

fn base_provenance(design: &PairDesign, n: usize, reps: usize, seed: u64) -> Vec<(String, String)> {
    let (a, b, kind) = design.describe();
    vec![
        ("library".into(), LIBRARY.into()),
        ("model1".into(), a),
        ("model2".into(), b),
        ("pairing".into(), kind.into()),
        ("n".into(), n.to_string()),
        ("reps".into(), reps.to_string()),
        ("seed".into(), seed.to_string()),
    ]
}

/// Replicates a test to estimate interval coverage and rejection rates.
pub fn coverage_study(setup: &CoverageSetup) -> Result<CoverageReport> {
    if setup.reps < 100 {
        return Err(Error::param("reps", format!("coverage studies need at least 100 replications, got {}", setup.reps)));
    }
    if matches!(setup.threshold, ThresholdSpec::Limit { .. }) && matches!(setup.design, PairDesign::Countermonotone(_)) {
        return Err(Error::param("design", "limit tests need independently drawn blocks"));
    }
    crate::inference::check_level(setup.level)?;
    let results = (0..setup.reps).into_par_iter().map(|r| setup.one(r)).collect::<Result<Vec<_>>>()?;
    let truth = setup.truth();
    let reps = results.len() as f64;
    let rate = |f: &dyn Fn(&TestResult) -> bool| results.iter().filter(|r| f(r)).count() as f64 / reps;
    let coverage = truth.map(|t| rate(&|r| r.covers(t)));
    let reject_two = rate(&|r| r.p_two.is_some_and(|p| p < setup.level));
    let reject_left = rate(&|r| r.p_left.is_some_and(|p| p < setup.level));
    let reject_right = rate(&|r| r.p_right.is_some_and(|p| p < setup.level));
    let degenerate = results.iter().filter(|r| r.degenerate).count();

    let mut table = Table::new("coverage", &["metric", "value", "mc_se"]);
    table.provenance = base_provenance(&setup.design, setup.n, setup.reps, setup.seed);
    table.provenance.extend([
        ("level".into(), setup.level.to_string()),
        (
            "threshold".into(),
            match setup.threshold {
                ThresholdSpec::Finite { u } => format!("finite u={u}"),
                ThresholdSpec::Limit { k, v, regime } => format!("limit k={k} v={v} regime={regime:?}"),
            },
        ),
        ("w".into(), setup.cfg.w.to_string()),
        ("xstar".into(), setup.cfg.h2.scale().to_string()),
    ]);
    table.push(vec!["truth".into(), truth.into(), Cell::Missing]);
    let mut push = |name: &str, value: Option<f64>| {
        let se = value.map(|p| proportion_se(p, setup.reps));
        table.push(vec![name.into(), value.into(), se.into()]);
    };
    push("coverage", coverage);
    push("reject_two_sided", Some(reject_two));
    push("reject_left", Some(reject_left));
    push("reject_right", Some(reject_right));
    table.push(vec!["degenerate".into(), degenerate.into(), Cell::Missing]);
    Ok(CoverageReport {
        truth,
        reps: setup.reps,
        coverage,
        reject_two,
        reject_left,
        reject_right,
        degenerate,
        results,
        table,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub truth: f64,
    /// Replication variance of `√n·ξ̂_w(u)`.
    pub replication_variance: f64,
    /// Mean of the plug-in `σ̂²_w(u)` over replications.
    pub mean_sigma2: f64,
    pub relative_error: f64,
    /// `(ξ̂ − ξ)/se` per replication.
    pub standardized: Vec<f64>,
    pub anderson_darling: f64,
    pub table: Table,
}

impl VarianceReport {
    pub fn normality_passes(&self) -> bool {
        self.anderson_darling < AD_CRITICAL_1PCT
    }
}

/// Compares the replication variance of `√n·ξ̂_w(u)` with the mean plug-in
/// variance and checks the standardized estimates for normality.
pub fn variance_study(design: &PairDesign, n: usize, u: f64, reps: usize, cfg: &XiConfig, seed: u64) -> Result<VarianceReport> {
    if reps < 100 {
        return Err(Error::param("reps", format!("variance studies need at least 100 replications, got {reps}")));
    }
    let (a, b) = design.models();
    let truth = oracle_xi_finite(&a, &b, u, cfg)
        .ok_or_else(|| Error::param("design", "variance study needs models with closed-form diagonals"))?;
    let draws = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let mut rng = substream(seed, r as u64);
            let tails = EmpiricalTails::from_sample(&design.sample(n, &mut rng)?);
            Ok((xi_hat(&tails, u, u, cfg)?, sigma2_hat(&tails, u, cfg)?.sigma2))
        })
        .collect::<Result<Vec<_>>>()?;
    let rn = (n as f64).sqrt();
    let scaled: Vec<f64> = draws.iter().map(|(x, _)| rn * x).collect();
    let sig: Vec<f64> = draws.iter().map(|(_, s)| *s).collect();
    let replication_variance = variance(&scaled);
    let mean_sigma2 = mean(&sig);
    let standardized: Vec<f64> = draws
        .iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(x, s)| (x - truth) / (s / n as f64).sqrt())
        .collect();
    let ad = anderson_darling_normal(&standardized);
    let relative_error = (mean_sigma2 - replication_variance).abs() / replication_variance;
    let mut table = Table::new("variance", &["metric", "value"]);
    table.provenance = base_provenance(design, n, reps, seed);
    table.provenance.push(("u".into(), u.to_string()));
    for (k, v) in [
        ("truth", truth),
        ("replication_variance", replication_variance),
        ("mean_sigma2", mean_sigma2),
        ("relative_error", relative_error),
        ("anderson_darling", ad),
        ("ad_critical_1pct", AD_CRITICAL_1PCT),
    ] {
        table.push(vec![k.into(), v.into()]);
    }
    Ok(VarianceReport {
        truth,
        replication_variance,
        mean_sigma2,
        relative_error,
        standardized,
        anderson_darling: ad,
        table,
    })
}

/// One moment compared with its exact value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub quantity: String,
    pub empirical: f64,
    pub theoretical: f64,
    pub mc_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    pub table: Table,
}

impl MomentReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    (mean(x), (variance(x) / x.len() as f64).sqrt())
}

/// Sample covariance and the Monte Carlo standard error of it (from the
/// spread of the centred products).
fn cov_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let m = x.len() as f64;
    let cov = prods.iter().sum::<f64>() / (m - 1.0);
    (cov, (variance(&prods) / m).sqrt())
}

/// Checks the exact first and second moments of `F̂₁`, `F̂₂` at thresholds
/// `u` and `v` against their closed forms over `reps` samples of size `n`.
pub fn moment_check(design: &PairDesign, n: usize, u: f64, v: f64, reps: usize, seed: u64) -> Result<MomentReport> {
    if reps < 500 {
        return Err(Error::param("reps", format!("moment checks need at least 500 replications, got {reps}")));
    }
    for (name, t) in [("u", u), ("v", v)] {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::param(name, format!("must lie in (0, 1), got {t}")));
        }
    }
    let (a, b) = design.models();
    let need = || Error::param("design", "moment check needs models with closed-form CDFs");
    let f1 = |t: f64| a.diagonal(t).ok_or_else(need);
    let f2 = |t: f64| b.diagonal(t).ok_or_else(need);
    let (f1u, f1v, f2u, f2v) = (f1(u)?, f1(v)?, f2(u)?, f2(v)?);
    let h12 = design.joint(u, v).ok_or_else(need)?;
    let h21 = match design {
        PairDesign::Independent(..) => f2u * f1v,
        // P(M⁽²⁾ ≤ u, M⁽¹⁾ ≤ v) is the joint function with the roles swapped
        PairDesign::Countermonotone(_) => design.joint(v, u).ok_or_else(need)?,
    };
    let draws = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<[f64; 4]> {
            let mut rng = substream(seed, r as u64);
            let t = EmpiricalTails::from_sample(&design.sample(n, &mut rng)?);
            Ok([t.f1(u), t.f1(v), t.f2(u), t.f2(v)])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |j: usize| -> Vec<f64> { draws.iter().map(|d| d[j]).collect() };
    let (x1u, x1v, x2u, x2v) = (col(0), col(1), col(2), col(3));
    let nf = n as f64;
    let (lo, hi) = (u.min(v), u.max(v));
    let (f1lo, f1hi, f2lo, f2hi) = (f1(lo)?, f1(hi)?, f2(lo)?, f2(hi)?);
    let mut rows = Vec::new();
    let mut push = |q: &str, (emp, se): (f64, f64), theory: f64| {
        rows.push(MomentRow {
            quantity: q.to_owned(),
            empirical: emp,
            theoretical: theory,
            mc_se: se,
            z: if se > 0.0 { (emp - theory) / se } else if emp == theory { 0.0 } else { f64::INFINITY },
        });
    };
    push("E[F1(u)]", mean_se(&x1u), 1.0 / nf + f1u);
    push("E[F1(v)]", mean_se(&x1v), 1.0 / nf + f1v);
    push("E[F2(u)]", mean_se(&x2u), 1.0 / nf + f2u);
    push("E[F2(v)]", mean_se(&x2v), 1.0 / nf + f2v);
    push("Var[F1(u)]", cov_se(&x1u, &x1u), f1u * (1.0 - f1u) / nf);
    push("Var[F2(v)]", cov_se(&x2v, &x2v), f2v * (1.0 - f2v) / nf);
    push("Cov[F1(u),F1(v)]", cov_se(&x1u, &x1v), f1lo * (1.0 - f1hi) / nf);
    push("Cov[F2(u),F2(v)]", cov_se(&x2u, &x2v), f2lo * (1.0 - f2hi) / nf);
    push("Cov[F1(u),F2(v)]", cov_se(&x1u, &x2v), (h12 - f1u * f2v) / nf);
    push("Cov[F2(u),F1(v)]", cov_se(&x2u, &x1v), (h21 - f2u * f1v) / nf);

    let mut table = Table::new("moments", &["quantity", "empirical", "theoretical", "mc_se", "z"]);
    table.provenance = base_provenance(design, n, reps, seed);
    table.provenance.extend([("u".into(), u.to_string()), ("v".into(), v.to_string())]);
    for r in &rows {
        table.push(vec![r.quantity.clone().into(), r.empirical.into(), r.theoretical.into(), r.mc_se.into(), r.z.into()]);
    }
    Ok(MomentReport { rows, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fgm(delta: f64) -> CopulaModel {
        CopulaModel::Fgm { delta }
    }

    #[test]
    fn countermonotone_joint_function() {
        let d = PairDesign::Countermonotone(CopulaModel::Independence { d: 2 });
        // P(0.3 ≤ U ≤ 0.9)² for independent margins
        assert_abs_diff_eq!(d.joint(0.9, 0.7).unwrap(), 0.36, epsilon = 1e-15);
        assert_eq!(d.joint(0.2, 0.35).unwrap(), 0.0);
        let i = PairDesign::Independent(fgm(0.5), fgm(1.0));
        assert_abs_diff_eq!(i.joint(0.2, 0.3).unwrap(), fgm(0.5).diagonal(0.2).unwrap() * fgm(1.0).diagonal(0.3).unwrap(), epsilon = 1e-16);
    }

    #[test]
    fn known_quantities() {
        let q = known_tail_quantities(&fgm(1.0).survival()).unwrap();
        assert_eq!((q.kappa, q.lambda), (2.0, 2.0));
        assert!(known_tail_quantities(&CopulaModel::SkewNormal { rho: 0.1, delta1: 0.0, delta2: 0.0 }).is_none());
    }

    #[test]
    fn moment_check_small() {
        let d = PairDesign::Countermonotone(fgm(0.5));
        let r = moment_check(&d, 50, 0.2, 0.35, 600, 1).unwrap();
        assert_eq!(r.rows.len(), 10);
        assert!(r.max_abs_z() < 5.0, "{:?}", r.rows);
        assert!(moment_check(&d, 50, 0.2, 0.35, 100, 1).is_err());
    }

    #[test]
    fn coverage_requires_enough_reps_and_independent_limit_blocks() {
        let cfg = XiConfig::clamps(0.5, 2, 1.5).unwrap();
        let mut s = CoverageSetup {
            design: PairDesign::Independent(fgm(0.3), fgm(0.3)),
            n: 2000,
            reps: 50,
            level: 0.05,
            threshold: ThresholdSpec::Finite { u: 0.2 },
            cfg,
            seed: 1,
            draisma: DraismaForm::Squared,
            truth: None,
        };
        assert!(coverage_study(&s).is_err());
        s.reps = 100;
        let r = coverage_study(&s).unwrap();
        assert_eq!(r.truth, Some(0.0));
        assert!(r.coverage.unwrap() > 0.8);
        s.design = PairDesign::Countermonotone(fgm(0.3));
        s.threshold = ThresholdSpec::Limit { k: 50, v: 0.1, regime: SeRegime::CaseI };
        assert!(coverage_study(&s).is_err());
    }
}
