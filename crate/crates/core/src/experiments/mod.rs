//! Reproducible drivers for the simulation and empirical studies and the
//! validation studies behind the estimators' guarantees.
//!
//! Every driver takes an [`ExperimentSpec`] and returns a [`Report`] of CSV
//! tables, each carrying a `#` provenance header (spec echo, library version
//! and seed), plus SVG line charts drawn from the same tables. Replications
//! run on the rayon pool with per-replication RNG substreams and are
//! collected in replication order, so output is byte-identical for a given
//! spec regardless of the pool size.

pub mod empirical;
pub mod reference;
pub mod simulation;
pub mod svg;
pub mod validation;
mod sweeps;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::TestResult;
use crate::io::{parse_key_values, Cell, Table};
use crate::limit::{DraismaForm, SplitStrategy};
use crate::numeric::linspace;
use crate::tail_theory::XiConfig;

pub use empirical::{filter_prices, run_empirical_case, synthetic_fixture, synthetic_prices, EmpiricalCase, EmpiricalData, FilteredData};
pub use simulation::{run_simulation_case, SimulationCase};
pub use validation::{coverage_study, moment_check, variance_study, CoverageReport, CoverageSetup, MomentReport, PairDesign, ThresholdSpec, VarianceReport};

pub const LIBRARY: &str = concat!("tailequiv ", env!("CARGO_PKG_VERSION"));

/// A threshold grid: `lo:hi:steps` evenly spaced points or an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Linspace { lo: f64, hi: f64, steps: usize },
    List(Vec<f64>),
}

impl Grid {
    pub fn linspace(lo: f64, hi: f64, steps: usize) -> Self {
        Grid::Linspace { lo, hi, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Linspace { lo, hi, steps } => linspace(*lo, *hi, *steps),
            Grid::List(v) => v.clone(),
        }
    }

    /// Values rounded to the nearest integer (for order-statistic counts).
    pub fn counts(&self) -> Vec<usize> {
        self.values().iter().map(|v| v.round().max(0.0) as usize).collect()
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Linspace { steps, .. } => *steps,
            Grid::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Linspace { lo, hi, steps } => write!(f, "{lo}:{hi}:{steps}"),
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Accepts `lo:hi:steps`, a single number, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("grid", format!("expected lo:hi:steps or a list of numbers, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
            if steps == 0 || !(lo.is_finite() && hi.is_finite()) || (steps > 1 && hi < lo) {
                return Err(bad());
            }
            return Ok(Grid::Linspace { lo, hi, steps });
        }
        if parts.len() != 1 {
            return Err(bad());
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(Grid::List(values))
    }
}

/// Everything needed to reproduce one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: String,
    /// Sample size of simulated data (ignored for empirical runs).
    pub n: usize,
    pub u_grid: Grid,
    /// Hill order-statistic counts swept at `v_fixed`.
    pub k_grid: Grid,
    pub v_fixed: f64,
    /// Tail-probability thresholds swept at `k_fixed`.
    pub v_grid: Grid,
    pub k_fixed: usize,
    pub xstar: f64,
    pub xstar_grid: Grid,
    /// Thresholds swept for each `x*` in the robustness table.
    pub xstar_v_grid: Grid,
    pub w: f64,
    pub level: f64,
    pub seed: u64,
    pub replications: usize,
    /// Monte Carlo draws behind reference curves (0 disables them).
    pub reference_draws: usize,
    /// Row split used by the limit estimator on empirical data.
    pub split: Option<SplitStrategy>,
    pub draisma: DraismaForm,
}

impl ExperimentSpec {
    /// Defaults of the simulation study.
    pub fn simulation(case: SimulationCase) -> Self {
        Self {
            scenario: format!("simulation-{case}"),
            n: 40_000,
            u_grid: Grid::linspace(0.0025, 0.25, 50),
            k_grid: Grid::linspace(400.0, 4000.0, 37),
            v_fixed: 0.025,
            v_grid: Grid::linspace(0.01, 0.1, 46),
            k_fixed: 1000,
            xstar: 1.5,
            xstar_grid: Grid::linspace(1.0, 2.0, 5),
            xstar_v_grid: Grid::linspace(0.01, 0.1, 19),
            w: 0.5,
            level: 0.05,
            seed: 20_240_401,
            replications: 1,
            reference_draws: 10_000_000,
            split: None,
            draisma: DraismaForm::Squared,
        }
    }

    /// Defaults of the empirical study.
    pub fn empirical(case: EmpiricalCase) -> Self {
        Self {
            scenario: format!("empirical-{case}"),
            n: 1153,
            u_grid: Grid::linspace(0.05, 0.4, 50),
            k_grid: Grid::linspace(50.0, 500.0, 46),
            v_fixed: 0.1,
            v_grid: Grid::linspace(0.05, 0.4, 36),
            k_fixed: 100,
            xstar: 0.5,
            xstar_grid: Grid::linspace(0.25, 1.5, 6),
            xstar_v_grid: Grid::linspace(0.1, 0.2, 11),
            w: 0.5,
            level: 0.05,
            seed: 20_240_401,
            replications: 1,
            reference_draws: 0,
            split: if case == EmpiricalCase::V { None } else { Some(SplitStrategy::Halves) },
            draisma: DraismaForm::Squared,
        }
    }

    pub fn xi_config(&self) -> Result<XiConfig> {
        XiConfig::clamps(self.w, 2, self.xstar)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
        }
        match key {
            "scenario" => self.scenario = value.to_owned(),
            "n" => self.n = num("n", value)?,
            "u_grid" => self.u_grid = value.parse()?,
            "k_grid" => self.k_grid = value.parse()?,
            "v_fixed" => self.v_fixed = num("v_fixed", value)?,
            "v_grid" => self.v_grid = value.parse()?,
            "k_fixed" => self.k_fixed = num("k_fixed", value)?,
            "xstar" => self.xstar = num("xstar", value)?,
            "xstar_grid" => self.xstar_grid = value.parse()?,
            "xstar_v_grid" => self.xstar_v_grid = value.parse()?,
            "w" => self.w = num("w", value)?,
            "level" => self.level = num("level", value)?,
            "seed" => self.seed = num("seed", value)?,
            "replications" => self.replications = num("replications", value)?,
            "reference_draws" => self.reference_draws = num("reference_draws", value)?,
            "split" => {
                self.split = match value.trim() {
                    "none" => None,
                    s => Some(s.parse()?),
                }
            }
            "draisma" => self.draisma = value.parse()?,
            other => return Err(Error::Parameter { name: "spec", reason: format!("unknown key `{other}`") }),
        }
        Ok(())
    }

    /// Applies every entry of a `key=value` text on top of `self`.
    pub fn with_overrides(mut self, text: &str) -> Result<Self> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn apply_map(mut self, map: &BTreeMap<String, String>) -> Result<Self> {
        for (k, v) in map {
            self.set(k, v)?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, g: &Grid| -> Result<()> {
            if g.is_empty() {
                return Err(Error::param(name, "grid is empty"));
            }
            if let Some(v) = g.values().into_iter().find(|v| !(*v > 0.0 && *v < 1.0)) {
                return Err(Error::param(name, format!("value {v} is outside (0, 1)")));
            }
            Ok(())
        };
        unit("u_grid", &self.u_grid)?;
        unit("v_grid", &self.v_grid)?;
        unit("xstar_v_grid", &self.xstar_v_grid)?;
        if self.k_grid.is_empty() || self.k_grid.counts().contains(&0) {
            return Err(Error::param("k_grid", "grid must be nonempty with counts of at least 1"));
        }
        if self.k_fixed == 0 {
            return Err(Error::param("k_fixed", "must be at least 1"));
        }
        if !(self.v_fixed > 0.0 && self.v_fixed < 1.0) {
            return Err(Error::param("v_fixed", format!("must lie in (0, 1), got {}", self.v_fixed)));
        }
        if self.xstar_grid.is_empty() || self.xstar_grid.values().iter().any(|x| !(*x > 0.0)) {
            return Err(Error::param("xstar_grid", "values must be positive"));
        }
        if self.n < 4 {
            return Err(Error::param("n", "sample size must be at least 4"));
        }
        if self.replications == 0 {
            return Err(Error::param("replications", "must be at least 1"));
        }
        crate::inference::check_level(self.level)?;
        self.xi_config()?;
        Ok(())
    }

    /// The spec as ordered `key=value` pairs (the inverse of [`Self::set`]).
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("scenario", self.scenario.clone()),
            ("n", self.n.to_string()),
            ("u_grid", self.u_grid.to_string()),
            ("k_grid", self.k_grid.to_string()),
            ("v_fixed", self.v_fixed.to_string()),
            ("v_grid", self.v_grid.to_string()),
            ("k_fixed", self.k_fixed.to_string()),
            ("xstar", self.xstar.to_string()),
            ("xstar_grid", self.xstar_grid.to_string()),
            ("xstar_v_grid", self.xstar_v_grid.to_string()),
            ("w", self.w.to_string()),
            ("level", self.level.to_string()),
            ("seed", self.seed.to_string()),
            ("replications", self.replications.to_string()),
            ("reference_draws", self.reference_draws.to_string()),
            ("split", self.split.map_or_else(|| "none".to_owned(), |s| s.to_string())),
            ("draisma", self.draisma.to_string()),
        ]
    }

    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut p = vec![("library".to_owned(), LIBRARY.to_owned())];
        p.extend(self.to_pairs().into_iter().map(|(k, v)| (k.to_owned(), v)));
        p
    }
}

/// A rendered chart ready to be written next to its table.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub name: String,
    pub svg: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub charts: Vec<Chart>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<name>.csv` for each table and `<name>.svg` for each chart.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        let mut written = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            t.write_csv(&p)?;
            written.push(p);
        }
        for c in &self.charts {
            let p = dir.join(format!("{}.svg", c.name));
            crate::io::write_text(&p, &c.svg)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Column names of the test-result block shared by all sweep tables.
pub const TEST_COLUMNS: [&str; 7] = ["xi_hat", "se", "ci_lo", "ci_hi", "p_left", "p_right", "p_two"];

pub(crate) fn test_cells(r: &TestResult) -> Vec<Cell> {
    vec![
        r.estimate.into(),
        r.se.into(),
        r.ci_low.into(),
        r.ci_high.into(),
        r.p_left.into(),
        r.p_right.into(),
        r.p_two.into(),
    ]
}

pub(crate) fn columns<'a>(lead: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    lead.iter().chain(TEST_COLUMNS.iter()).chain(tail).copied().collect()
}

/// Estimate and p-value charts for one sweep table, using replication 0.
pub(crate) fn sweep_charts(table: &Table, x_col: &str, title: &str, w: f64, level: f64, reference: Option<&str>) -> Vec<Chart> {
    use svg::{HLine, LineChart, Series, Stroke};
    let rows: Vec<usize> = match table.column_index("rep") {
        Some(j) => (0..table.rows.len()).filter(|&i| table.rows[i][j] == Cell::Int(0)).collect(),
        None => (0..table.rows.len()).collect(),
    };
    let col = |name: &str| -> Vec<f64> {
        let all = table.numeric_column(name).unwrap_or_default();
        rows.iter().map(|&i| all.get(i).copied().unwrap_or(f64::NAN)).collect()
    };
    let x = col(x_col);
    let mut est = LineChart::new(format!("{title}: estimate"), x_col, "xi");
    est.y_range = Some((-1.0, 1.0));
    est.series.push(Series::new("estimate", "black", Stroke::Solid, &x, &col("xi_hat")));
    est.series.push(Series::new("CI", "blue", Stroke::Dotted, &x, &col("ci_lo")));
    est.series.push(Series::new("", "blue", Stroke::Dotted, &x, &col("ci_hi")));
    if let Some(r) = reference {
        est.series.push(Series::new("reference", "green", Stroke::Solid, &x, &col(r)));
    }
    est.hlines = vec![
        HLine { y: 0.0, colour: "red", stroke: Stroke::Solid },
        HLine { y: w, colour: "red", stroke: Stroke::Dotted },
        HLine { y: -w, colour: "red", stroke: Stroke::Dotted },
    ];
    let mut pv = LineChart::new(format!("{title}: p-values"), x_col, "p-value");
    pv.y_range = Some((0.0, 1.0));
    pv.series.push(Series::new("left", "black", Stroke::Solid, &x, &col("p_left")));
    pv.series.push(Series::new("right", "red", Stroke::Solid, &x, &col("p_right")));
    pv.series.push(Series::new("two-sided", "blue", Stroke::Solid, &x, &col("p_two")));
    pv.hlines = vec![HLine { y: level, colour: "brown", stroke: Stroke::Dotted }];
    vec![
        Chart { name: format!("{}_estimate", table.name), svg: est.render() },
        Chart { name: format!("{}_pvalues", table.name), svg: pv.render() },
    ]
}

/// One chart with an estimate curve and CI band per `x*` value.
pub(crate) fn xstar_chart(table: &Table, title: &str, w: f64) -> Chart {
    use svg::{HLine, LineChart, Series, Stroke};
    const COLOURS: [&str; 6] = ["black", "blue", "green", "purple", "orange", "teal"];
    let xs = table.numeric_column("xstar").unwrap_or_default();
    let v = table.numeric_column("v").unwrap_or_default();
    let est = table.numeric_column("xi_hat").unwrap_or_default();
    let rep0: Vec<bool> = match table.column_index("rep") {
        Some(j) => table.rows.iter().map(|r| r[j] == Cell::Int(0)).collect(),
        None => vec![true; table.rows.len()],
    };
    let mut distinct: Vec<f64> = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut chart = LineChart::new(format!("{title}: x* robustness"), "v", "xi");
    chart.y_range = Some((-1.0, 1.0));
    for (i, x) in distinct.iter().enumerate() {
        let idx: Vec<usize> = (0..xs.len()).filter(|&j| xs[j] == *x && rep0[j]).collect();
        let vv: Vec<f64> = idx.iter().map(|&j| v[j]).collect();
        let ee: Vec<f64> = idx.iter().map(|&j| est[j]).collect();
        chart.series.push(Series::new(format!("x*={x}"), COLOURS[i % COLOURS.len()], Stroke::Solid, &vv, &ee));
    }
    chart.hlines = vec![
        HLine { y: 0.0, colour: "red", stroke: Stroke::Solid },
        HLine { y: w, colour: "red", stroke: Stroke::Dotted },
        HLine { y: -w, colour: "red", stroke: Stroke::Dotted },
    ];
    Chart { name: table.name.clone(), svg: chart.render() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.0025:0.25:50".parse().unwrap();
        assert_eq!(g.len(), 50);
        let v = g.values();
        assert_eq!(v[0], 0.0025);
        assert_eq!(v[49], 0.25);
        assert_eq!("1000".parse::<Grid>().unwrap().counts(), vec![1000]);
        assert_eq!("0.1, 0.2".parse::<Grid>().unwrap().values(), vec![0.1, 0.2]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("0.5:0.1:3".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
    }

    #[test]
    fn spec_round_trip_and_validation() {
        let spec = ExperimentSpec::simulation(SimulationCase::III);
        assert!(spec.validate().is_ok());
        let text: String = spec.to_pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let back = ExperimentSpec::empirical(EmpiricalCase::I).with_overrides(&text).unwrap();
        assert_eq!(back, spec);
        assert!(spec.clone().with_overrides("u_grid=0:0.5:3").is_err());
        assert!(spec.clone().with_overrides("bogus=1").is_err());
        assert!(spec.clone().with_overrides("replications=0").is_err());
    }

    #[test]
    fn defaults_follow_the_studies() {
        let s = ExperimentSpec::simulation(SimulationCase::I);
        assert_eq!((s.n, s.xstar, s.w, s.k_fixed, s.v_fixed), (40_000, 1.5, 0.5, 1000, 0.025));
        let k = s.k_grid.counts();
        assert_eq!((k[0], k[1], *k.last().unwrap()), (400, 500, 4000));
        let e = ExperimentSpec::empirical(EmpiricalCase::V);
        assert_eq!((e.xstar, e.k_fixed, e.v_fixed, e.split), (0.5, 100, 0.1, None));
        assert_eq!(ExperimentSpec::empirical(EmpiricalCase::II).split, Some(SplitStrategy::Halves));
    }
}
