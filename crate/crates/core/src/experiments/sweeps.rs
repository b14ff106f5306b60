//! Threshold sweeps shared by the simulation and empirical drivers.

use ndarray::ArrayView2;
use rayon::prelude::*;

use super::{columns, sweep_charts, test_cells, xstar_chart, Chart, ExperimentSpec};
use crate::error::Result;
use crate::finite::{finite_test, EmpiricalTails};
use crate::inference::Alternative;
use crate::io::{Cell, Table};
use crate::limit::{limit_test, xi_limit_hat, LimitOptions, SeRegime};
use crate::tail_theory::XiConfig;

/// Rows produced by one replication (or one empirical run).
#[derive(Debug, Default)]
pub(crate) struct SweepRows {
    pub finite: Vec<Vec<Cell>>,
    pub vary_k: Vec<Vec<Cell>>,
    pub vary_v: Vec<Vec<Cell>>,
    pub xstar: Vec<Vec<Cell>>,
}

/// Per-threshold references appended to sweep rows.
pub(crate) struct References<'a> {
    pub finite: &'a [Option<f64>],
    pub limit: Option<f64>,
}

pub(crate) const FINITE_LEAD: [&str; 2] = ["rep", "u"];
pub(crate) const FINITE_TAIL: [&str; 2] = ["degenerate", "xi_ref"];
pub(crate) const LIMIT_LEAD: [&str; 3] = ["rep", "k", "v"];
pub(crate) const LIMIT_TAIL: [&str; 6] = ["kappa1_hat", "kappa2_hat", "alpha_hat", "m_tilde", "low_count", "xi_limit_ref"];
pub(crate) const XSTAR_LEAD: [&str; 4] = ["rep", "xstar", "k", "v"];

fn limit_row(
    rep: usize,
    x1: ArrayView2<'_, f64>,
    x2: ArrayView2<'_, f64>,
    k: usize,
    v: f64,
    cfg: &XiConfig,
    spec: &ExperimentSpec,
    reference: Option<f64>,
) -> Result<Vec<Cell>> {
    let options = LimitOptions {
        draisma: spec.draisma,
        regime: SeRegime::CaseI,
    };
    let est = xi_limit_hat(x1, x2, k, v, cfg, &options)?;
    let test = limit_test(&est, spec.level, Alternative::Two)?;
    let mut row: Vec<Cell> = vec![rep.into(), k.into(), v.into()];
    row.extend(test_cells(&test));
    row.extend([
        est.kappa1_hat.into(),
        est.kappa2_hat.into(),
        est.alpha_vn.into(),
        est.m_tilde.into(),
        est.low_count.into(),
        reference.into(),
    ]);
    Ok(row)
}

/// Runs the four sweeps: finite thresholds on `tails`, and the limit
/// estimator on the blocks `(x1, x2)` over the k-grid, the v-grid and the
/// `x*` robustness grid.
pub(crate) fn run_sweeps(
    rep: usize,
    tails: &EmpiricalTails,
    x1: ArrayView2<'_, f64>,
    x2: ArrayView2<'_, f64>,
    spec: &ExperimentSpec,
    refs: &References<'_>,
) -> Result<SweepRows> {
    let cfg = spec.xi_config()?;
    let u_grid = spec.u_grid.values();
    let finite = u_grid
        .par_iter()
        .enumerate()
        .map(|(i, &u)| -> Result<Vec<Cell>> {
            let r = finite_test(tails, u, &cfg, spec.level)?;
            let mut row: Vec<Cell> = vec![rep.into(), u.into()];
            row.extend(test_cells(&r));
            row.push(r.degenerate.into());
            row.push(refs.finite.get(i).copied().flatten().into());
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let vary_k = spec
        .k_grid
        .counts()
        .par_iter()
        .map(|&k| limit_row(rep, x1, x2, k, spec.v_fixed, &cfg, spec, refs.limit))
        .collect::<Result<Vec<_>>>()?;
    let vary_v = spec
        .v_grid
        .values()
        .par_iter()
        .map(|&v| limit_row(rep, x1, x2, spec.k_fixed, v, &cfg, spec, refs.limit))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = spec
        .xstar_grid
        .values()
        .into_iter()
        .flat_map(|x| spec.xstar_v_grid.values().into_iter().map(move |v| (x, v)))
        .collect();
    let xstar = pairs
        .par_iter()
        .map(|&(xs, v)| -> Result<Vec<Cell>> {
            let c = cfg.with_xstar(xs)?;
            let mut row = limit_row(rep, x1, x2, spec.k_fixed, v, &c, spec, None)?;
            // drop the limit-specific tail and insert x* after the rep column
            row.truncate(LIMIT_LEAD.len() + super::TEST_COLUMNS.len());
            row.insert(1, xs.into());
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRows { finite, vary_k, vary_v, xstar })
}

/// Assembles the four tables and their charts from per-replication rows.
pub(crate) fn assemble(prefix: &str, spec: &ExperimentSpec, provenance: &[(String, String)], reps: Vec<SweepRows>, finite_reference: bool, limit_reference: bool) -> (Vec<Table>, Vec<Chart>) {
    let make = |suffix: &str, cols: Vec<&str>, pick: &dyn Fn(&SweepRows) -> &Vec<Vec<Cell>>| {
        let mut t = Table::new(format!("{prefix}_{suffix}"), &cols);
        t.provenance = provenance.to_vec();
        for r in &reps {
            for row in pick(r) {
                t.push(row.clone());
            }
        }
        t
    };
    let finite = make("finite", columns(&FINITE_LEAD, &FINITE_TAIL), &|r| &r.finite);
    let vary_k = make("vary_k", columns(&LIMIT_LEAD, &LIMIT_TAIL), &|r| &r.vary_k);
    let vary_v = make("vary_v", columns(&LIMIT_LEAD, &LIMIT_TAIL), &|r| &r.vary_v);
    let xstar = make("xstar", columns(&XSTAR_LEAD, &[]), &|r| &r.xstar);
    let mut charts = Vec::new();
    let reference = finite_reference.then_some("xi_ref");
    let limit_ref = limit_reference.then_some("xi_limit_ref");
    charts.extend(sweep_charts(&finite, "u", &format!("{prefix} finite threshold"), spec.w, spec.level, reference));
    charts.extend(sweep_charts(&vary_k, "k", &format!("{prefix} limit, v={}", spec.v_fixed), spec.w, spec.level, limit_ref));
    charts.extend(sweep_charts(&vary_v, "v", &format!("{prefix} limit, k={}", spec.k_fixed), spec.w, spec.level, limit_ref));
    charts.push(xstar_chart(&xstar, prefix, spec.w));
    (vec![finite, vary_k, vary_v, xstar], charts)
}
