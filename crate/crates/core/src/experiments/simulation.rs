//! Simulation study: three skew-family comparisons at `n = 4×10⁴`.
//!
//! * Case i: lower tails of two identical skew-normal copulas
//!   `SN(ρ=0.5, δ=−0.4)`, drawn independently. The limit is 0.
//! * Case ii: lower versus upper tail of `SN(ρ=0.5, δ=−0.7)`. The limit lies
//!   in `(−1, −1/2)`.
//! * Case iii: lower versus upper tail of the skew-t copula
//!   `ST(ρ=0.5, δ=0.6, ν=5)`. The limit lies in `(0, 1/2)`.
//!
//! Finite-threshold runs in cases ii and iii pair each draw with its
//! reflection `1 − U`, so the second block follows the survival copula.
//! Limit runs draw the two blocks independently.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::reference::{diagonal_tails, xi_from_tails};
use super::sweeps::{assemble, run_sweeps, References};
use super::{ExperimentSpec, Report};
use crate::copulas::{CopulaModel, PairedSample, Pairing};
use crate::error::{Error, Result};
use crate::finite::EmpiricalTails;
use crate::rng::substream;

/// Stream key of the Monte Carlo reference curves, kept apart from the
/// replication substreams of the same seed.
const REFERENCE_KEY: u64 = 0x7265_6665_7265_6e63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationCase {
    I,
    II,
    III,
}

impl fmt::Display for SimulationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimulationCase::I => "i",
            SimulationCase::II => "ii",
            SimulationCase::III => "iii",
        })
    }
}

impl FromStr for SimulationCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(SimulationCase::I),
            "ii" | "2" => Ok(SimulationCase::II),
            "iii" | "3" => Ok(SimulationCase::III),
            other => Err(Error::param("case", format!("unknown simulation case `{other}` (expected i, ii or iii)"))),
        }
    }
}

impl SimulationCase {
    pub const ALL: [SimulationCase; 3] = [SimulationCase::I, SimulationCase::II, SimulationCase::III];

    /// The underlying copula `C`.
    pub fn model(&self) -> CopulaModel {
        match self {
            SimulationCase::I => CopulaModel::SkewNormal { rho: 0.5, delta1: -0.4, delta2: -0.4 },
            SimulationCase::II => CopulaModel::SkewNormal { rho: 0.5, delta1: -0.7, delta2: -0.7 },
            SimulationCase::III => CopulaModel::SkewT { rho: 0.5, delta1: 0.6, delta2: 0.6, nu: 5.0 },
        }
    }

    /// `(C₁, C₂)`; upper tails enter as lower tails of the survival copula.
    pub fn models(&self) -> (CopulaModel, CopulaModel) {
        let c = self.model();
        match self {
            SimulationCase::I => (c.clone(), c),
            _ => (c.clone(), c.survival()),
        }
    }

    pub fn finite_pairing(&self) -> Pairing {
        match self {
            SimulationCase::I => Pairing::Independent,
            _ => Pairing::Countermonotone,
        }
    }

    /// Open interval known to contain the limit (degenerate at 0 for case i).
    pub fn limit_interval(&self) -> (f64, f64) {
        match self {
            SimulationCase::I => (0.0, 0.0),
            SimulationCase::II => (-1.0, -0.5),
            SimulationCase::III => (0.0, 0.5),
        }
    }

    /// Sample for the finite-threshold estimator.
    pub fn finite_sample(&self, n: usize, rng: &mut crate::rng::StreamRng) -> Result<PairedSample> {
        let (c1, c2) = self.models();
        match self.finite_pairing() {
            Pairing::Countermonotone => PairedSample::countermonotone(&c1, n, rng),
            _ => PairedSample::independent(&c1, &c2, n, rng),
        }
    }

    /// Independent blocks for the limit estimator.
    pub fn limit_sample(&self, n: usize, rng: &mut crate::rng::StreamRng) -> Result<PairedSample> {
        let (c1, c2) = self.models();
        PairedSample::independent(&c1, &c2, n, rng)
    }
}

/// Reference `ξ_w(u)` on the spec's u-grid: exactly 0 for case i, Monte
/// Carlo otherwise (omitted when `reference_draws = 0`).
pub fn reference_curve(case: SimulationCase, spec: &ExperimentSpec) -> Result<Vec<Option<f64>>> {
    let grid = spec.u_grid.values();
    if case == SimulationCase::I {
        return Ok(vec![Some(0.0); grid.len()]);
    }
    if spec.reference_draws == 0 {
        return Ok(vec![None; grid.len()]);
    }
    let cfg = spec.xi_config()?;
    let tails = diagonal_tails(&case.model(), &grid, spec.reference_draws, spec.seed ^ REFERENCE_KEY)?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &u)| xi_from_tails(tails.lower[i], tails.upper[i], u, &cfg))
        .collect())
}

/// Runs one simulation case and returns the finite, k-sweep, v-sweep and
/// `x*` tables (named `sim_<case>_*`) with charts.
pub fn run_simulation_case(case: SimulationCase, spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let reference = reference_curve(case, spec)?;
    let limit_ref = (case == SimulationCase::I).then_some(0.0);
    let reps = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(spec.seed, rep as u64);
            let finite = case.finite_sample(spec.n, &mut rng)?;
            let limit = case.limit_sample(spec.n, &mut rng)?;
            let tails = EmpiricalTails::from_sample(&finite);
            let refs = References { finite: &reference, limit: limit_ref };
            run_sweeps(rep, &tails, limit.u1.view(), limit.u2.view(), spec, &refs)
        })
        .collect::<Result<Vec<_>>>()?;
    let (c1, c2) = case.models();
    let (lo, hi) = case.limit_interval();
    let mut provenance = spec.provenance();
    provenance.extend([
        ("case".to_owned(), case.to_string()),
        ("model1".to_owned(), c1.to_string()),
        ("model2".to_owned(), c2.to_string()),
        ("finite_pairing".to_owned(), case.finite_pairing().to_string()),
        ("limit_pairing".to_owned(), Pairing::Independent.to_string()),
        ("limit_interval".to_owned(), format!("[{lo},{hi}]")),
        (
            "reference".to_owned(),
            match (case, spec.reference_draws) {
                (SimulationCase::I, _) => "exact".to_owned(),
                (_, 0) => "none".to_owned(),
                (_, d) => format!("monte-carlo draws={d}"),
            },
        ),
    ]);
    let has_ref = reference.iter().any(Option::is_some);
    let (tables, charts) = assemble(&format!("sim_{case}"), spec, &provenance, reps, has_ref, limit_ref.is_some());
    Ok(Report { tables, charts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Grid;

    fn small_spec(case: SimulationCase) -> ExperimentSpec {
        let mut s = ExperimentSpec::simulation(case);
        s.n = 2000;
        s.u_grid = Grid::linspace(0.05, 0.25, 5);
        s.k_grid = Grid::linspace(50.0, 150.0, 3);
        s.v_fixed = 0.1;
        s.v_grid = Grid::linspace(0.05, 0.15, 3);
        s.k_fixed = 100;
        s.xstar_grid = Grid::linspace(1.0, 2.0, 2);
        s.xstar_v_grid = Grid::linspace(0.05, 0.1, 2);
        s.reference_draws = 100_000;
        s.replications = 2;
        s
    }

    #[test]
    fn case_parsing() {
        assert_eq!("iii".parse::<SimulationCase>().unwrap(), SimulationCase::III);
        assert_eq!("2".parse::<SimulationCase>().unwrap(), SimulationCase::II);
        assert!("iv".parse::<SimulationCase>().is_err());
    }

    #[test]
    fn tables_have_grid_shapes_and_are_deterministic() {
        let spec = small_spec(SimulationCase::II);
        let a = run_simulation_case(SimulationCase::II, &spec).unwrap();
        let names: Vec<&str> = a.tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["sim_ii_finite", "sim_ii_vary_k", "sim_ii_vary_v", "sim_ii_xstar"]);
        assert_eq!(a.table("sim_ii_finite").unwrap().rows.len(), 2 * 5);
        assert_eq!(a.table("sim_ii_vary_k").unwrap().rows.len(), 2 * 3);
        assert_eq!(a.table("sim_ii_xstar").unwrap().rows.len(), 2 * 4);
        assert_eq!(a.charts.len(), 7);
        let b = run_simulation_case(SimulationCase::II, &spec).unwrap();
        for (x, y) in a.tables.iter().zip(&b.tables) {
            assert_eq!(x.to_csv_string(), y.to_csv_string());
        }
        let csv = a.tables[0].to_csv_string();
        assert!(csv.starts_with("# library=tailequiv "));
        assert!(csv.contains("# seed=20240401\n"));
        // the reference curve is populated and negative for case ii
        let r = a.tables[0].numeric_column("xi_ref").unwrap();
        assert!(r.iter().all(|v| *v < 0.0), "{r:?}");
    }

    #[test]
    fn case_one_reference_is_zero() {
        let spec = small_spec(SimulationCase::I);
        let rep = run_simulation_case(SimulationCase::I, &spec).unwrap();
        let r = rep.tables[0].numeric_column("xi_ref").unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
        let l = rep.tables[1].numeric_column("xi_limit_ref").unwrap();
        assert!(l.iter().all(|v| *v == 0.0));
    }
}
