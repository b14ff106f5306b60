//! GARCH(1,1) volatility filtering of negative log returns.
//!
//! The conditional variance follows `σ²_t = ω + α ε²_{t−1} + β σ²_{t−1}` with
//! `ε_t = r_t − μ` and `σ²_1` set to the sample variance. Innovations have unit
//! variance and are normal, standardised Student t, or Hansen's skew t. The
//! copula analysis downstream only uses ranks of the standardised residuals,
//! so the innovation family matters only through the fitted variance path.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{mean, variance};
use crate::optimize::NelderMead;
use crate::rng::stream;

pub const BURN_IN: usize = 500;
const MIN_FIT_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub dates: Option<Vec<String>>,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, dates: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `r_t = −log(p_t/p_{t−1})`.
pub fn neg_log_returns(prices: &[f64]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::Data(format!("need at least 2 prices, got {}", prices.len())));
    }
    if let Some((i, p)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::Data(format!("price at index {i} is not positive: {p}")));
    }
    Ok(ReturnSeries::new(prices.windows(2).map(|w| -(w[1] / w[0]).ln()).collect()))
}

/// Which innovation distribution to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnovationFamily {
    Normal,
    StudentT,
    #[default]
    SkewT,
}

impl fmt::Display for InnovationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnovationFamily::Normal => "normal",
            InnovationFamily::StudentT => "t",
            InnovationFamily::SkewT => "skewt",
        })
    }
}

impl FromStr for InnovationFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(InnovationFamily::Normal),
            "t" => Ok(InnovationFamily::StudentT),
            "skewt" => Ok(InnovationFamily::SkewT),
            other => Err(Error::param("innovation", format!("unknown innovation family `{other}`"))),
        }
    }
}

/// Unit-variance innovation distribution with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Normal,
    StudentT { nu: f64 },
    /// Hansen's skew t with tail parameter `nu > 2` and skewness `lambda ∈ (−1, 1)`.
    SkewT { nu: f64, lambda: f64 },
}

struct HansenConstants {
    a: f64,
    b: f64,
    log_c: f64,
}

fn hansen_constants(nu: f64, lambda: f64) -> HansenConstants {
    let log_c = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (PI * (nu - 2.0)).ln();
    let a = 4.0 * lambda * log_c.exp() * (nu - 2.0) / (nu - 1.0);
    let b = (1.0 + 3.0 * lambda * lambda - a * a).sqrt();
    HansenConstants { a, b, log_c }
}

impl Innovation {
    pub fn family(&self) -> InnovationFamily {
        match self {
            Innovation::Normal => InnovationFamily::Normal,
            Innovation::StudentT { .. } => InnovationFamily::StudentT,
            Innovation::SkewT { .. } => InnovationFamily::SkewT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Innovation::Normal => Ok(()),
            Innovation::StudentT { nu } | Innovation::SkewT { nu, .. } if !(nu > 2.0 && nu.is_finite()) => {
                Err(Error::param("nu", format!("must exceed 2, got {nu}")))
            }
            Innovation::SkewT { lambda, .. } if !(lambda > -1.0 && lambda < 1.0) => {
                Err(Error::param("lambda", format!("must lie in (-1, 1), got {lambda}")))
            }
            _ => Ok(()),
        }
    }

    /// Log density of the unit-variance innovation.
    pub fn log_density(&self, z: f64) -> f64 {
        match *self {
            Innovation::Normal => -0.5 * (2.0 * PI).ln() - 0.5 * z * z,
            Innovation::StudentT { nu } => {
                ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (PI * (nu - 2.0)).ln()
                    - 0.5 * (nu + 1.0) * (z * z / (nu - 2.0)).ln_1p()
            }
            Innovation::SkewT { nu, lambda } => {
                let k = hansen_constants(nu, lambda);
                let y = k.b * z + k.a;
                let side = if y < 0.0 { 1.0 - lambda } else { 1.0 + lambda };
                k.b.ln() + k.log_c - 0.5 * (nu + 1.0) * ((y / side).powi(2) / (nu - 2.0)).ln_1p()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Innovation::Normal => rng.sample(StandardNormal),
            Innovation::StudentT { nu } => standardized_t(nu, rng),
            Innovation::SkewT { nu, lambda } => {
                let k = hansen_constants(nu, lambda);
                let t = standardized_t(nu, rng).abs();
                let left: f64 = rng.random();
                let y = if left < 0.5 * (1.0 - lambda) { -(1.0 - lambda) * t } else { (1.0 + lambda) * t };
                (y - k.a) / k.b
            }
        }
    }
}

fn standardized_t<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> f64 {
    let t: f64 = StudentT::new(nu).expect("validated degrees of freedom").sample(rng);
    t * ((nu - 2.0) / nu).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Constant mean (zero unless the mean equation is enabled).
    pub mu: f64,
    pub innovation: Innovation,
    pub loglik: f64,
    /// Standardised residuals `z_t = (r_t − μ)/σ_t`.
    pub residuals: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub converged: bool,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchOptions {
    pub family: InnovationFamily,
    pub mean: bool,
    pub max_restarts: usize,
    /// Convergence tolerance on the mean negative log-likelihood between restarts.
    pub tolerance: f64,
}

impl Default for GarchOptions {
    fn default() -> Self {
        Self {
            family: InnovationFamily::SkewT,
            mean: false,
            max_restarts: 8,
            tolerance: 1e-8,
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct Params {
    omega: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
    innovation: Innovation,
}

/// Unconstrained coordinates: `ln ω`, logit persistence, logit ARCH share,
/// then `ln(ν − 2)`, `atanh λ` and `μ` as the options require.
fn decode(theta: &[f64], opts: &GarchOptions) -> Params {
    let persistence = logistic(theta[1]);
    let share = logistic(theta[2]);
    let mut next = 3;
    let mut take = || {
        let v = theta[next];
        next += 1;
        v
    };
    let innovation = match opts.family {
        InnovationFamily::Normal => Innovation::Normal,
        InnovationFamily::StudentT => Innovation::StudentT { nu: 2.0 + take().exp() },
        InnovationFamily::SkewT => Innovation::SkewT {
            nu: 2.0 + take().exp(),
            lambda: take().tanh(),
        },
    };
    let mu = if opts.mean { take() } else { 0.0 };
    Params {
        omega: theta[0].exp(),
        alpha: persistence * share,
        beta: persistence * (1.0 - share),
        mu,
        innovation,
    }
}

fn filter(r: &[f64], p: &Params, sigma2_init: f64) -> (Vec<f64>, Vec<f64>) {
    let mut sigma2 = Vec::with_capacity(r.len());
    let mut z = Vec::with_capacity(r.len());
    let mut s2 = sigma2_init;
    for (t, &x) in r.iter().enumerate() {
        if t > 0 {
            let e = r[t - 1] - p.mu;
            s2 = p.omega + p.alpha * e * e + p.beta * s2;
        }
        sigma2.push(s2);
        z.push((x - p.mu) / s2.sqrt());
    }
    (sigma2, z)
}

fn loglik(r: &[f64], p: &Params, sigma2_init: f64) -> f64 {
    let (sigma2, z) = filter(r, p, sigma2_init);
    sigma2
        .iter()
        .zip(&z)
        .map(|(s2, z)| p.innovation.log_density(*z) - 0.5 * s2.ln())
        .sum()
}

fn assemble(r: &[f64], p: Params, sigma2_init: f64, converged: bool, restarts: usize) -> GarchFit {
    let ll = loglik(r, &p, sigma2_init);
    let (sigma2, residuals) = filter(r, &p, sigma2_init);
    GarchFit {
        omega: p.omega,
        alpha: p.alpha,
        beta: p.beta,
        mu: p.mu,
        innovation: p.innovation,
        loglik: ll,
        residuals,
        sigma2,
        converged,
        restarts,
    }
}

/// Initial unconstrained coordinates used by the fit.
fn initial_theta(r: &[f64], opts: &GarchOptions) -> Vec<f64> {
    let var = variance(r);
    let persistence: f64 = 0.9;
    let mut theta = vec![(var * (1.0 - persistence)).ln(), logit(persistence), logit(0.1)];
    match opts.family {
        InnovationFamily::Normal => {}
        InnovationFamily::StudentT => theta.push(6f64.ln()),
        InnovationFamily::SkewT => theta.extend([6f64.ln(), 0.0]),
    }
    if opts.mean {
        theta.push(mean(r));
    }
    theta
}

/// Log-likelihood at the optimiser's starting point.
pub fn initial_loglik(series: &ReturnSeries, opts: &GarchOptions) -> f64 {
    let r = &series.values;
    loglik(r, &decode(&initial_theta(r, opts), opts), variance(r))
}

/// Maximum-likelihood GARCH(1,1) fit by Nelder-Mead with restarts. Restarts
/// continue from the best point until an entire restart improves the mean
/// negative log-likelihood by less than `opts.tolerance`.
pub fn fit_garch11(series: &ReturnSeries, opts: &GarchOptions) -> Result<GarchFit> {
    let r = &series.values;
    if r.len() < MIN_FIT_LEN {
        return Err(Error::Data(format!(
            "GARCH fitting needs at least {MIN_FIT_LEN} returns, got {}",
            r.len()
        )));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("returns contain non-finite values".into()));
    }
    let sigma2_init = variance(r);
    if !(sigma2_init > 0.0) {
        return Err(Error::Data("returns have zero variance".into()));
    }
    let n = r.len() as f64;
    let objective = |theta: &[f64]| -loglik(r, &decode(theta, opts), sigma2_init) / n;
    let optimizer = NelderMead::default();
    let mut best = optimizer.minimize(objective, &initial_theta(r, opts));
    for restart in 1..=opts.max_restarts {
        let next = optimizer.minimize(objective, &best.x);
        let improvement = best.value - next.value;
        if next.value < best.value {
            best = next;
        }
        if improvement.abs() < opts.tolerance {
            return Ok(assemble(r, decode(&best.x, opts), sigma2_init, true, restart));
        }
    }
    Err(Error::FitNotConverged {
        restarts: opts.max_restarts,
        best: Box::new(assemble(r, decode(&best.x, opts), sigma2_init, false, opts.max_restarts)),
    })
}

pub fn standardized_residuals(fit: &GarchFit) -> Vec<f64> {
    fit.residuals.clone()
}

/// Simulated returns with zero mean, started from the stationary variance
/// and with the first [`BURN_IN`] draws discarded.
pub fn garch_simulate(omega: f64, alpha: f64, beta: f64, innovation: Innovation, n: usize, seed: u64) -> Result<ReturnSeries> {
    if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
        return Err(Error::param(
            "garch",
            format!("need omega > 0, alpha, beta >= 0, alpha + beta < 1; got ({omega}, {alpha}, {beta})"),
        ));
    }
    innovation.validate()?;
    let mut rng = stream(seed);
    let mut s2 = omega / (1.0 - alpha - beta);
    let mut out = Vec::with_capacity(n);
    for t in 0..n + BURN_IN {
        let e = s2.sqrt() * innovation.sample(&mut rng);
        if t >= BURN_IN {
            out.push(e);
        }
        s2 = omega + alpha * e * e + beta * s2;
    }
    Ok(ReturnSeries::new(out))
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let num: f64 = x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    num / denom
}
