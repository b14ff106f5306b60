//! Empirical study: tail comparisons of GARCH-filtered index returns.
//!
//! Three indices play fixed roles, in column order: a reference index (A),
//! and two others (B, C), by default named SP500, FTSE and NIKKEI. Two
//! periods of data are supported. The five cases are
//!
//! * i, ii: lower versus upper tail of (B, C) in period 1 / period 2;
//! * iii, iv: upper tail of (A, C) versus upper tail of (A, B) in period
//!   1 / period 2;
//! * v: upper tail of (B, C) in period 1 versus period 2.
//!
//! Upper tails enter as lower tails of `1 − U`. The limit estimator splits
//! rows into disjoint halves in cases i–iv, where both blocks come from the
//! same observations; case v compares different periods and is not split.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::sweeps::{assemble, run_sweeps, References};
use super::{ExperimentSpec, Report};
use crate::copulas::{pseudo_observations, PairedSample, Pairing};
use crate::error::{Error, Result};
use crate::finite::EmpiricalTails;
use crate::garch::{fit_garch11, neg_log_returns, standardized_residuals, GarchFit, GarchOptions, ReturnSeries};
use crate::io::{align_by_date, PriceSeries};
use crate::limit::split_sample;
use crate::rng::substream;

pub const DEFAULT_NAMES: [&str; 3] = ["SP500", "FTSE", "NIKKEI"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmpiricalCase {
    I,
    II,
    III,
    IV,
    V,
}

impl fmt::Display for EmpiricalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmpiricalCase::I => "i",
            EmpiricalCase::II => "ii",
            EmpiricalCase::III => "iii",
            EmpiricalCase::IV => "iv",
            EmpiricalCase::V => "v",
        })
    }
}

impl FromStr for EmpiricalCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(EmpiricalCase::I),
            "ii" | "2" => Ok(EmpiricalCase::II),
            "iii" | "3" => Ok(EmpiricalCase::III),
            "iv" | "4" => Ok(EmpiricalCase::IV),
            "v" | "5" => Ok(EmpiricalCase::V),
            other => Err(Error::param("case", format!("unknown empirical case `{other}` (expected i to v)"))),
        }
    }
}

impl EmpiricalCase {
    pub const ALL: [EmpiricalCase; 5] = [EmpiricalCase::I, EmpiricalCase::II, EmpiricalCase::III, EmpiricalCase::IV, EmpiricalCase::V];

    pub fn periods_needed(&self) -> usize {
        match self {
            EmpiricalCase::I | EmpiricalCase::III => 1,
            _ => 2,
        }
    }

    pub fn splits(&self) -> bool {
        *self != EmpiricalCase::V
    }

    pub fn describe(&self, names: &[String]) -> String {
        let (a, b, c) = (&names[0], &names[1], &names[2]);
        match self {
            EmpiricalCase::I => format!("lower vs upper tail of ({b},{c}), period 1"),
            EmpiricalCase::II => format!("lower vs upper tail of ({b},{c}), period 2"),
            EmpiricalCase::III => format!("upper tail of ({a},{c}) vs ({a},{b}), period 1"),
            EmpiricalCase::IV => format!("upper tail of ({a},{c}) vs ({a},{b}), period 2"),
            EmpiricalCase::V => format!("upper tail of ({b},{c}), period 1 vs period 2"),
        }
    }

    /// The paired sample `(U⁽¹⁾, U⁽²⁾)` of the case.
    pub fn sample(&self, data: &EmpiricalData) -> Result<PairedSample> {
        if data.periods.len() < self.periods_needed() {
            return Err(Error::Data(format!(
                "case {self} needs {} periods of data, got {}",
                self.periods_needed(),
                data.periods.len()
            )));
        }
        let cols = |p: usize, a: usize, b: usize| data.periods[p].select(Axis(1), &[a, b]);
        let upper = |m: Array2<f64>| m.mapv(|v| 1.0 - v);
        match self {
            EmpiricalCase::I | EmpiricalCase::II => {
                let p = usize::from(*self == EmpiricalCase::II);
                let x = cols(p, 1, 2);
                let y = upper(x.clone());
                PairedSample::new(x, y, Pairing::Countermonotone)
            }
            EmpiricalCase::III | EmpiricalCase::IV => {
                let p = usize::from(*self == EmpiricalCase::IV);
                PairedSample::new(upper(cols(p, 0, 2)), upper(cols(p, 0, 1)), Pairing::Joint)
            }
            EmpiricalCase::V => {
                let (x, y) = (upper(cols(0, 1, 2)), upper(cols(1, 1, 2)));
                let n = x.nrows().min(y.nrows());
                PairedSample::new(x.slice(s![..n, ..]).to_owned(), y.slice(s![..n, ..]).to_owned(), Pairing::Independent)
            }
        }
    }
}

/// Pseudo-observations of three filtered return series, per period.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalData {
    pub names: Vec<String>,
    pub periods: Vec<Array2<f64>>,
}

impl EmpiricalData {
    pub fn new(names: Vec<String>, periods: Vec<Array2<f64>>) -> Result<Self> {
        if names.len() != 3 {
            return Err(Error::Data(format!("expected three index names, got {}", names.len())));
        }
        if periods.is_empty() {
            return Err(Error::Data("no periods of data".into()));
        }
        for (p, m) in periods.iter().enumerate() {
            if m.ncols() != 3 {
                return Err(Error::Data(format!("period {} has {} columns, expected 3", p + 1, m.ncols())));
            }
            if m.nrows() < 8 {
                return Err(Error::Data(format!("period {} has only {} rows", p + 1, m.nrows())));
            }
            if let Some(v) = m.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(Error::Data(format!("period {} has value {v} outside (0, 1); expected pseudo-observations", p + 1)));
            }
        }
        Ok(Self { names, periods })
    }
}

/// GARCH-filtered pseudo-observations aligned on common dates.
#[derive(Debug, Clone)]
pub struct FilteredData {
    /// Dates of the returns (the later date of each price pair).
    pub dates: Vec<String>,
    pub names: Vec<String>,
    pub pseudo: Array2<f64>,
    pub fits: Vec<GarchFit>,
}

/// Fits a GARCH(1,1) per column of `returns` (in parallel) and returns the
/// pseudo-observations of the standardized residuals.
pub fn filter_returns(returns: ArrayView2<'_, f64>, opts: &GarchOptions) -> Result<(Array2<f64>, Vec<GarchFit>)> {
    let fits = (0..returns.ncols())
        .into_par_iter()
        .map(|j| fit_garch11(&ReturnSeries::new(returns.column(j).to_vec()), opts))
        .collect::<Result<Vec<_>>>()?;
    let n = returns.nrows();
    let mut z = Array2::zeros((n, fits.len()));
    for (j, fit) in fits.iter().enumerate() {
        for (t, v) in standardized_residuals(fit).into_iter().enumerate() {
            z[[t, j]] = v;
        }
    }
    Ok((pseudo_observations(z.view()), fits))
}

/// Aligns price series on their common dates, converts them to negative log
/// returns, filters each with GARCH(1,1) and ranks the residuals.
pub fn filter_prices(series: &[PriceSeries], opts: &GarchOptions) -> Result<FilteredData> {
    let (dates, prices) = align_by_date(series)?;
    let mut returns = Array2::zeros((prices.nrows() - 1, prices.ncols()));
    for j in 0..prices.ncols() {
        let r = neg_log_returns(&prices.column(j).to_vec())?;
        for (t, v) in r.values.into_iter().enumerate() {
            returns[[t, j]] = v;
        }
    }
    let (pseudo, fits) = filter_returns(returns.view(), opts)?;
    Ok(FilteredData {
        dates: dates[1..].to_vec(),
        names: series.iter().map(|s| s.name.clone()).collect(),
        pseudo,
        fits,
    })
}

/// Runs one empirical case on pseudo-observations and returns the finite,
/// k-sweep, v-sweep and `x*` tables (named `emp_<case>_*`) with charts.
pub fn run_empirical_case(case: EmpiricalCase, data: &EmpiricalData, spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let sample = case.sample(data)?;
    let tails = EmpiricalTails::from_sample(&sample);
    let split = if case.splits() { spec.split } else { None };
    let blocks = match split {
        Some(strategy) => {
            let (a, b) = split_sample(&sample, strategy)?;
            (a.u1, b.u2)
        }
        None => (sample.u1.clone(), sample.u2.clone()),
    };
    let max_k = blocks.0.nrows().min(blocks.1.nrows()) - 1;
    if let Some(k) = spec.k_grid.counts().into_iter().chain([spec.k_fixed]).find(|k| *k > max_k) {
        return Err(Error::param("k_grid", format!("k = {k} exceeds the {max_k} usable order statistics of a block")));
    }
    let no_ref = vec![None; spec.u_grid.len()];
    let refs = References { finite: &no_ref, limit: None };
    let rows = run_sweeps(0, &tails, blocks.0.view(), blocks.1.view(), spec, &refs)?;
    let mut provenance = spec.provenance();
    provenance.extend([
        ("case".to_owned(), case.to_string()),
        ("comparison".to_owned(), case.describe(&data.names)),
        ("indices".to_owned(), data.names.join(",")),
        ("rows".to_owned(), sample.n().to_string()),
        ("pairing".to_owned(), sample.pairing.to_string()),
        ("limit_split".to_owned(), split.map_or_else(|| "none".to_owned(), |s| s.to_string())),
    ]);
    let (tables, charts) = assemble(&format!("emp_{case}"), spec, &provenance, vec![rows], false, false);
    Ok(Report { tables, charts })
}

/// Latent correlations (A,B), (A,C), (B,C) of the fixture in each period.
const FIXTURE_CORR: [[f64; 3]; 2] = [[0.7, 0.3, 0.4], [0.7, 0.3, 0.7]];
/// Common skewness weight of the fixture's innovations.
const FIXTURE_DELTA: f64 = -0.8;
/// GARCH(1,1) `(ω, α, β)` of the three fixture series.
const FIXTURE_GARCH: [(f64, f64, f64); 3] = [(0.02, 0.08, 0.90), (0.03, 0.10, 0.85), (0.02, 0.06, 0.92)];
pub const FIXTURE_LEN: usize = 1153;
const FIXTURE_BURN_IN: usize = 500;

fn cholesky3(c: [f64; 3]) -> [[f64; 3]; 3] {
    let (ab, ac, bc) = (c[0], c[1], c[2]);
    let l11 = 1.0;
    let l21 = ab;
    let l22 = (1.0 - l21 * l21).sqrt();
    let l31 = ac;
    let l32 = (bc - l31 * l21) / l22;
    let l33 = (1.0 - l31 * l31 - l32 * l32).sqrt();
    [[l11, 0.0, 0.0], [l21, l22, 0.0], [l31, l32, l33]]
}

/// Synthetic price series shaped like the study: two periods of
/// [`FIXTURE_LEN`] returns for three indices.
///
/// Innovations follow a trivariate skew-normal factor model
/// `Yⱼ = δ|Z₀| + √(1−δ²)Zⱼ` with `δ = −0.8`, standardized and fed through
/// GARCH(1,1) recursions. The shared `−|Z₀|` loading puts more joint mass
/// in the lower tail, and the latent correlations make (A,B) more dependent
/// than (A,C), and (B,C) more dependent in period 2 than in period 1. The
/// expected signs of the measure are therefore negative in cases i and ii
/// and positive in cases iii, iv and v.
pub fn synthetic_prices(seed: u64) -> Result<Vec<Vec<PriceSeries>>> {
    let d = FIXTURE_DELTA;
    let mean = d * (2.0 / std::f64::consts::PI).sqrt();
    let sd = (1.0 - 2.0 * d * d / std::f64::consts::PI).sqrt();
    let s = (1.0 - d * d).sqrt();
    FIXTURE_CORR
        .iter()
        .enumerate()
        .map(|(p, corr)| {
            let l = cholesky3(*corr);
            let mut rng = substream(seed, p as u64);
            let mut s2: Vec<f64> = FIXTURE_GARCH.iter().map(|(w, a, b)| w / (1.0 - a - b)).collect();
            let mut prices = vec![vec![100.0]; 3];
            for t in 0..FIXTURE_LEN + FIXTURE_BURN_IN {
                let z0: f64 = rng.sample(StandardNormal);
                let e: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                for j in 0..3 {
                    let zj: f64 = (0..3).map(|m| l[j][m] * e[m]).sum();
                    let eps = (d * z0.abs() + s * zj - mean) / sd;
                    let r = s2[j].sqrt() * eps;
                    let (w, a, b) = FIXTURE_GARCH[j];
                    s2[j] = w + a * r * r + b * s2[j];
                    if t >= FIXTURE_BURN_IN {
                        // r is a negative log return in percent, so the price falls when r > 0
                        let last = *prices[j].last().expect("seeded");
                        prices[j].push(last * (-r / 100.0).exp());
                    }
                }
            }
            Ok(prices
                .into_iter()
                .zip(DEFAULT_NAMES)
                .map(|(px, name)| PriceSeries {
                    name: name.to_owned(),
                    dates: (0..px.len()).map(|t| format!("p{}-{t:04}", p + 1)).collect(),
                    prices: px,
                })
                .collect())
        })
        .collect()
}

/// The synthetic fixture passed through the full filtering pipeline.
pub fn synthetic_fixture(seed: u64, opts: &GarchOptions) -> Result<EmpiricalData> {
    let periods = synthetic_prices(seed)?
        .iter()
        .map(|series| filter_prices(series, opts).map(|f| f.pseudo))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalData::new(DEFAULT_NAMES.iter().map(|s| (*s).to_owned()).collect(), periods)
}
