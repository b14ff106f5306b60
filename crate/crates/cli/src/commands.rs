//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tailequiv::copulas::Pairing;
use tailequiv::experiments::empirical::DEFAULT_NAMES;
use tailequiv::experiments::validation::PairDesign;
use tailequiv::experiments::{
    coverage_study, filter_prices, moment_check, run_empirical_case, run_simulation_case, synthetic_fixture, CoverageSetup, EmpiricalCase, EmpiricalData,
    ExperimentSpec, Grid, Report, SimulationCase, ThresholdSpec, LIBRARY,
};
use tailequiv::io::{read_key_values, read_matrix, read_prices, read_sample, write_sample, Cell, SampleMeta, Table};
use tailequiv::limit::xi_limit_hat_paired;
use tailequiv::rng::stream;
use tailequiv::{
    finite_test, limit_test, Alternative, CopulaModel, DraismaForm, EmpiricalTails, Error, GarchOptions, InnovationFamily, LimitOptions, PairedSample, Result,
    SeRegime, SplitStrategy, XiConfig,
};

#[derive(Debug, Parser)]
#[command(name = "tailequiv", version, about = "Measure and test tail equivalence between copulas")]
pub struct Cli {
    /// Worker threads [default: number of logical cores]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a paired copula sample and store it as CSV with a .meta sidecar
    Sample(SampleArgs),
    /// GARCH-filter price series into pseudo-observations aligned by date
    Filter(FilterArgs),
    /// Finite-threshold estimates and tests over a u-grid
    EstimateFinite(FiniteArgs),
    /// Limit estimates and tests over k and v values
    EstimateLimit(LimitArgs),
    /// Run a simulation study case and write CSV tables and SVG charts
    Simulate(SimulateArgs),
    /// Run an empirical study case and write CSV tables and SVG charts
    Empirical(EmpiricalArgs),
    /// Monte Carlo coverage, size and power of the tests
    Coverage(CoverageArgs),
    /// Compare empirical moments of the tail estimators with their exact values
    MomentCheck(MomentArgs),
}

/// Copula syntax: indep(d), fgm(delta), sn(rho,delta1,delta2),
/// st(rho,delta1,delta2,nu) and survival(<copula>).
#[derive(Debug, Args)]
pub struct DesignArgs {
    /// First copula, e.g. fgm(0.5) or sn(0.5,-0.7,-0.7)
    #[arg(long)]
    model1: CopulaModel,
    /// Second copula [default: same as --model1; implied by countermonotone pairing]
    #[arg(long)]
    model2: Option<CopulaModel>,
    /// How the two blocks are generated: independent or countermonotone (second block is 1 − U of the first)
    #[arg(long, default_value = "independent")]
    pairing: Pairing,
}

impl DesignArgs {
    fn design(&self) -> Result<PairDesign> {
        match self.pairing {
            Pairing::Independent => Ok(PairDesign::Independent(self.model1.clone(), self.model2.clone().unwrap_or_else(|| self.model1.clone()))),
            Pairing::Countermonotone => {
                let implied = self.model1.clone().survival();
                match &self.model2 {
                    Some(m) if *m != implied => Err(usage("model2", format!("countermonotone pairing implies model2 = {implied}"))),
                    _ => Ok(PairDesign::Countermonotone(self.model1.clone())),
                }
            }
            other => Err(usage("pairing", format!("cannot simulate `{other}` pairing; use independent or countermonotone"))),
        }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Rows per block
    #[arg(long, default_value_t = 40_000)]
    n: usize,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV (n rows, first block then second block columns)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Price CSV files with columns date,price, one per index
    #[arg(required = true, num_args = 1..)]
    prices: Vec<PathBuf>,
    /// Innovation family of the GARCH(1,1) fit: normal, t or skewt
    #[arg(long, default_value = "skewt")]
    innovation: InnovationFamily,
    /// Fit a constant conditional mean
    #[arg(long)]
    mean: bool,
    /// Restarts of the likelihood optimiser
    #[arg(long, default_value_t = 8)]
    max_restarts: usize,
    /// Output CSV of pseudo-observations (date column plus one column per index)
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV with the fitted GARCH parameters per index
    #[arg(long)]
    fits: Option<PathBuf>,
}

/// Input data: one paired file, or two block files with equal row counts.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Paired sample CSV written by `sample` (columns of block 1, then block 2)
    #[arg(long, conflicts_with_all = ["x1", "x2"], required_unless_present_all = ["x1", "x2"])]
    sample: Option<PathBuf>,
    /// First block CSV (one column per margin)
    #[arg(long, requires = "x2")]
    x1: Option<PathBuf>,
    /// Second block CSV (one column per margin)
    #[arg(long, requires = "x1")]
    x2: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> Result<PairedSample> {
        match (&self.sample, &self.x1, &self.x2) {
            (Some(p), _, _) => Ok(read_sample(p)?.0),
            (None, Some(a), Some(b)) => PairedSample::new(read_matrix(a)?, read_matrix(b)?, Pairing::Independent),
            _ => Err(usage("input", "give --sample or both --x1 and --x2")),
        }
    }
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Weight of the log-ratio term
    #[arg(long, default_value_t = 0.5)]
    w: f64,
    /// Saturation point x* of the log-ratio clamp
    #[arg(long, default_value_t = 1.5)]
    xstar: f64,
    /// Test level (confidence intervals have coverage 1 − level)
    #[arg(long, default_value_t = 0.05)]
    level: f64,
}

impl MeasureArgs {
    fn config(&self, d: usize) -> Result<XiConfig> {
        XiConfig::clamps(self.w, d, self.xstar)
    }
}

#[derive(Debug, Args)]
pub struct FiniteArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Thresholds as lo:hi:steps or a comma-separated list
    #[arg(long, default_value = "0.0025:0.25:50")]
    u_grid: Grid,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Output CSV [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Hill order-statistic counts: a single value or lo:hi:steps
    #[arg(long, default_value = "1000")]
    k: Grid,
    /// Tail-probability thresholds: a single value or lo:hi:steps
    #[arg(long, default_value = "0.025")]
    v: Grid,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Row split giving disjoint blocks: halves, interleave or none
    #[arg(long, default_value = "none")]
    split: String,
    /// Case I standard errors (tail-order term dominates); the default
    #[arg(long, conflicts_with = "case2_kappa")]
    case1_se: bool,
    /// Case II standard errors with this asserted common tail order [default: off]
    #[arg(long, requires = "case2_tau")]
    case2_kappa: Option<f64>,
    /// Case II ratio tau = m_n/(n v^kappa)
    #[arg(long, requires = "case2_kappa")]
    case2_tau: Option<f64>,
    /// Leading factor of the Hill variance: squared (kappa²) or as-printed (kappa)
    #[arg(long, default_value = "squared")]
    draisma: DraismaForm,
    /// Output CSV [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Study settings shared by `simulate` and `empirical`; later sources
/// override earlier ones: case presets, then --spec, then --set, then flags.
#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Plain-text key=value spec file
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Extra key=value settings (repeatable), e.g. --set n=10000
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Weight of the log-ratio term [default: 0.5]
    #[arg(long)]
    w: Option<f64>,
    /// Saturation point x* [default: 1.5 for simulate, 0.5 for empirical]
    #[arg(long)]
    xstar: Option<f64>,
    /// Random seed [default: 20240401]
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the CSV tables and SVG charts
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Print the effective spec of each case as key=value and exit
    #[arg(long)]
    print_spec: bool,
}

impl StudyArgs {
    fn resolve(&self, mut spec: ExperimentSpec) -> Result<ExperimentSpec> {
        if let Some(path) = &self.spec {
            spec = spec.apply_map(&read_key_values(path)?)?;
        }
        for entry in &self.set {
            let (k, v) = entry.split_once('=').ok_or_else(|| usage("set", format!("expected KEY=VALUE, got `{entry}`")))?;
            spec.set(k.trim(), v)?;
        }
        if let Some(w) = self.w {
            spec.w = w;
        }
        if let Some(x) = self.xstar {
            spec.xstar = x;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Case i, ii, iii or all
    #[arg(long, default_value = "all")]
    case: String,
    #[command(flatten)]
    study: StudyArgs,
}

#[derive(Debug, Args)]
pub struct EmpiricalArgs {
    /// Case i, ii, iii, iv, v or all
    #[arg(long, default_value = "all")]
    case: String,
    /// Pseudo-observation CSVs (three columns each), one per period [default: the synthetic fixture]
    #[arg(long, num_args = 1..=2, conflicts_with_all = ["prices1", "prices2"])]
    pseudo: Vec<PathBuf>,
    /// Price CSVs of period 1, one per index in role order A, B, C
    #[arg(long, num_args = 3)]
    prices1: Vec<PathBuf>,
    /// Price CSVs of period 2, one per index in role order A, B, C
    #[arg(long, num_args = 3, requires = "prices1")]
    prices2: Vec<PathBuf>,
    /// Index names in role order A, B, C
    #[arg(long, num_args = 3, default_values = DEFAULT_NAMES)]
    names: Vec<String>,
    /// Innovation family for filtering prices or the fixture: normal, t or skewt
    #[arg(long, default_value = "skewt")]
    innovation: InnovationFamily,
    #[command(flatten)]
    study: StudyArgs,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Rows per block
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Replications (at least 100)
    #[arg(long, default_value_t = 300)]
    reps: usize,
    /// Test to study: finite or limit
    #[arg(long, default_value = "finite")]
    test: String,
    /// Threshold of the finite test
    #[arg(long, default_value_t = 0.1)]
    u: f64,
    /// Hill order-statistic count of the limit test
    #[arg(long, default_value_t = 200)]
    k: usize,
    /// Tail-probability threshold of the limit test
    #[arg(long, default_value_t = 0.05)]
    v: f64,
    /// Case II standard errors with this asserted common tail order [default: Case I]
    #[arg(long, requires = "case2_tau")]
    case2_kappa: Option<f64>,
    /// Case II ratio tau = m_n/(n v^kappa)
    #[arg(long, requires = "case2_kappa")]
    case2_tau: Option<f64>,
    /// Leading factor of the Hill variance: squared or as-printed
    #[arg(long, default_value = "squared")]
    draisma: DraismaForm,
    /// Value the intervals should cover [default: closed form when available]
    #[arg(long)]
    truth: Option<f64>,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Rows per block
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// First threshold
    #[arg(long, default_value_t = 0.2)]
    u: f64,
    /// Second threshold
    #[arg(long, default_value_t = 0.35)]
    v: f64,
    /// Replications (at least 500)
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter { name, reason: reason.into() }
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => table.write_csv(p),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(table.to_csv_string().as_bytes())
                .map_err(|e| Error::Io { path: PathBuf::from("<stdout>"), source: e })
        }
    }
}

fn regime(kappa: Option<f64>, tau: Option<f64>) -> SeRegime {
    match (kappa, tau) {
        (Some(kappa), Some(tau)) => SeRegime::CaseII { kappa, tau },
        _ => SeRegime::CaseI,
    }
}

fn parse_split(s: &str) -> Result<Option<SplitStrategy>> {
    match s.trim() {
        "none" => Ok(None),
        other => other.parse().map(Some),
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => sample(a),
        Command::Filter(a) => filter(a),
        Command::EstimateFinite(a) => estimate_finite(a),
        Command::EstimateLimit(a) => estimate_limit(a),
        Command::Simulate(a) => simulate(a),
        Command::Empirical(a) => empirical(a),
        Command::Coverage(a) => coverage(a),
        Command::MomentCheck(a) => moments(a),
    }
}

fn sample(a: SampleArgs) -> Result<()> {
    let design = a.design.design()?;
    if a.n == 0 {
        return Err(usage("n", "sample size must be at least 1"));
    }
    let (m1, m2) = design.models();
    let sample = design.sample(a.n, &mut stream(a.seed))?.with_seed(a.seed);
    let meta = SampleMeta {
        model1: Some(m1),
        model2: Some(m2),
        pairing: sample.pairing,
        seed: Some(a.seed),
        d: sample.u1.ncols(),
    };
    write_sample(&a.out, &sample, &meta)
}

fn filter(a: FilterArgs) -> Result<()> {
    let series = a.prices.iter().map(read_prices).collect::<Result<Vec<_>>>()?;
    let opts = GarchOptions {
        family: a.innovation,
        mean: a.mean,
        max_restarts: a.max_restarts,
        ..GarchOptions::default()
    };
    let f = filter_prices(&series, &opts)?;
    let mut cols = vec!["date"];
    cols.extend(f.names.iter().map(String::as_str));
    let mut table = Table::new("pseudo", &cols);
    table.provenance = vec![("library".into(), LIBRARY.into()), ("innovation".into(), a.innovation.to_string()), ("mean".into(), a.mean.to_string())];
    for (t, date) in f.dates.iter().enumerate() {
        let mut row: Vec<Cell> = vec![date.as_str().into()];
        row.extend(f.pseudo.row(t).iter().map(|v| Cell::from(*v)));
        table.push(row);
    }
    table.write_csv(&a.out)?;
    if let Some(path) = &a.fits {
        let mut fits = Table::new("fits", &["index", "omega", "alpha", "beta", "mu", "loglik", "converged", "restarts"]);
        fits.provenance = table.provenance.clone();
        for (name, fit) in f.names.iter().zip(&f.fits) {
            fits.push(vec![
                name.as_str().into(),
                fit.omega.into(),
                fit.alpha.into(),
                fit.beta.into(),
                fit.mu.into(),
                fit.loglik.into(),
                fit.converged.into(),
                fit.restarts.into(),
            ]);
        }
        fits.write_csv(path)?;
    }
    Ok(())
}

fn estimate_finite(a: FiniteArgs) -> Result<()> {
    let sample = a.input.load()?;
    let cfg = a.measure.config(sample.u1.ncols())?;
    let tails = EmpiricalTails::from_sample(&sample);
    let mut table = Table::new("finite", &["u", "xi_hat", "se", "ci_lo", "ci_hi", "p_left", "p_right", "p_two", "degenerate"]);
    table.provenance = vec![
        ("library".into(), LIBRARY.into()),
        ("n".into(), sample.n().to_string()),
        ("w".into(), a.measure.w.to_string()),
        ("xstar".into(), a.measure.xstar.to_string()),
        ("level".into(), a.measure.level.to_string()),
    ];
    for u in a.u_grid.values() {
        let r = finite_test(&tails, u, &cfg, a.measure.level)?;
        table.push(vec![
            u.into(),
            r.estimate.into(),
            r.se.into(),
            r.ci_low.into(),
            r.ci_high.into(),
            r.p_left.into(),
            r.p_right.into(),
            r.p_two.into(),
            r.degenerate.into(),
        ]);
    }
    emit(&table, a.out.as_deref())
}

fn estimate_limit(a: LimitArgs) -> Result<()> {
    let sample = a.input.load()?;
    let split = parse_split(&a.split)?;
    let cfg = a.measure.config(sample.u1.ncols())?;
    let options = LimitOptions {
        draisma: a.draisma,
        regime: regime(a.case2_kappa, a.case2_tau),
    };
    let mut table = Table::new(
        "limit",
        &[
            "k", "v", "xi_hat", "kappa1_hat", "kappa2_hat", "sigma2_1", "sigma2_2", "alpha_hat", "m_tilde", "count1", "count2", "low_count", "se", "ci_lo", "ci_hi",
            "p_left", "p_right", "p_two",
        ],
    );
    table.provenance = vec![
        ("library".into(), LIBRARY.into()),
        ("n".into(), sample.n().to_string()),
        ("w".into(), a.measure.w.to_string()),
        ("xstar".into(), a.measure.xstar.to_string()),
        ("level".into(), a.measure.level.to_string()),
        ("split".into(), a.split.clone()),
        ("draisma".into(), a.draisma.to_string()),
        ("regime".into(), format!("{:?}", options.regime)),
    ];
    for k in a.k.counts() {
        for v in a.v.values() {
            let est = xi_limit_hat_paired(&sample, split, k, v, &cfg, &options)?;
            let r = limit_test(&est, a.measure.level, Alternative::Two)?;
            table.push(vec![
                k.into(),
                v.into(),
                est.xi_hat.into(),
                est.kappa1_hat.into(),
                est.kappa2_hat.into(),
                est.sigma2_1.into(),
                est.sigma2_2.into(),
                est.alpha_vn.into(),
                est.m_tilde.into(),
                est.counts.0.into(),
                est.counts.1.into(),
                est.low_count.into(),
                r.se.into(),
                r.ci_low.into(),
                r.ci_high.into(),
                r.p_left.into(),
                r.p_right.into(),
                r.p_two.into(),
            ]);
        }
    }
    emit(&table, a.out.as_deref())
}

fn cases<T: Copy + std::str::FromStr<Err = Error>>(arg: &str, all: &[T]) -> Result<Vec<T>> {
    if arg.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    arg.split(',').map(str::parse).collect()
}

fn write_report(report: &Report, dir: &Path) -> Result<()> {
    for path in report.write(dir)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn print_spec(spec: &ExperimentSpec) {
    for (k, v) in spec.to_pairs() {
        println!("{k}={v}");
    }
    println!();
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let specs = cases(&a.case, &SimulationCase::ALL)?
        .into_iter()
        .map(|c| a.study.resolve(ExperimentSpec::simulation(c)).map(|s| (c, s)))
        .collect::<Result<Vec<_>>>()?;
    for (case, spec) in specs {
        if a.study.print_spec {
            print_spec(&spec);
            continue;
        }
        write_report(&run_simulation_case(case, &spec)?, &a.study.out_dir)?;
    }
    Ok(())
}

fn empirical_data(a: &EmpiricalArgs, seed: u64) -> Result<EmpiricalData> {
    let opts = GarchOptions {
        family: a.innovation,
        ..GarchOptions::default()
    };
    if !a.pseudo.is_empty() {
        let periods = a.pseudo.iter().map(read_matrix).collect::<Result<Vec<_>>>()?;
        return EmpiricalData::new(a.names.clone(), periods);
    }
    if !a.prices1.is_empty() {
        let mut periods = Vec::new();
        for files in [&a.prices1, &a.prices2] {
            if files.is_empty() {
                continue;
            }
            let series = files.iter().map(read_prices).collect::<Result<Vec<_>>>()?;
            periods.push(filter_prices(&series, &opts)?.pseudo);
        }
        return EmpiricalData::new(a.names.clone(), periods);
    }
    eprintln!("no data given; using the synthetic fixture (seed {seed})");
    synthetic_fixture(seed, &opts)
}

fn empirical(a: EmpiricalArgs) -> Result<()> {
    let specs = cases(&a.case, &EmpiricalCase::ALL)?
        .into_iter()
        .map(|c| a.study.resolve(ExperimentSpec::empirical(c)).map(|s| (c, s)))
        .collect::<Result<Vec<_>>>()?;
    if a.study.print_spec {
        specs.iter().for_each(|(_, s)| print_spec(s));
        return Ok(());
    }
    let seed = specs.first().map_or(0, |(_, s)| s.seed);
    let data = empirical_data(&a, seed)?;
    for (case, spec) in specs {
        if case.periods_needed() > data.periods.len() {
            return Err(Error::Data(format!("case {case} needs {} periods of data, got {}", case.periods_needed(), data.periods.len())));
        }
        write_report(&run_empirical_case(case, &data, &spec)?, &a.study.out_dir)?;
    }
    Ok(())
}

fn coverage(a: CoverageArgs) -> Result<()> {
    let design = a.design.design()?;
    let threshold = match a.test.as_str() {
        "finite" => ThresholdSpec::Finite { u: a.u },
        "limit" => ThresholdSpec::Limit {
            k: a.k,
            v: a.v,
            regime: regime(a.case2_kappa, a.case2_tau),
        },
        other => return Err(usage("test", format!("expected finite or limit, got `{other}`"))),
    };
    let setup = CoverageSetup {
        cfg: a.measure.config(design.models().0.dim())?,
        design,
        n: a.n,
        reps: a.reps,
        level: a.measure.level,
        threshold,
        seed: a.seed,
        draisma: a.draisma,
        truth: a.truth,
    };
    emit(&coverage_study(&setup)?.table, a.out.as_deref())
}

fn moments(a: MomentArgs) -> Result<()> {
    let design = a.design.design()?;
    emit(&moment_check(&design, a.n, a.u, a.v, a.reps, a.seed)?.table, a.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_shows_defaults() {
        let mut cmd = Cli::command();
        let help = cmd.find_subcommand_mut("estimate-finite").unwrap().render_long_help().to_string();
        assert!(help.contains("[default: 0.0025:0.25:50]"), "{help}");
        assert!(help.contains("[default: 1.5]"));
        let help = cmd.find_subcommand_mut("empirical").unwrap().render_long_help().to_string();
        assert!(help.contains("0.5 for empirical"));
    }
}
