use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tailequiv::experiments::synthetic_prices;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailequiv")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Data rows of a CSV with `#` provenance lines and one header line.
fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["estimate-finite", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error: kind=usage message="), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_data_error() {
    let o = run(&["estimate-finite", "--sample", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("error: kind=data"), "{}", stderr(&o));
}

#[test]
fn invalid_parameter_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = path(dir.path(), "s.csv");
    assert!(run(&["sample", "--model1", "fgm(0.5)", "--n", "200", "--out", &s]).status.success());
    let o = run(&["estimate-finite", "--sample", &s, "--w", "1.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(run(&["--jobs", "0", "moment-check", "--model1", "fgm(0.5)"]).status.code(), Some(2));
}

#[test]
fn help_documents_defaults() {
    let o = run(&["estimate-limit", "--help"]);
    assert!(o.status.success());
    let h = stdout(&o);
    for needle in ["[default: 1000]", "[default: 0.025]", "[default: none]", "[default: squared]", "--case1-se"] {
        assert!(h.contains(needle), "missing {needle} in\n{h}");
    }
}

#[test]
fn finite_sweep_on_a_stored_case_three_sample() {
    let dir = tempfile::tempdir().unwrap();
    let s = path(dir.path(), "case3.csv");
    let o = run(&["sample", "--model1", "st(0.5,0.6,0.6,5)", "--pairing", "countermonotone", "--n", "40000", "--seed", "3", "--out", &s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = fs::read_to_string(format!("{s}.meta")).unwrap();
    assert!(meta.contains("model2=survival(st(0.5,0.6,0.6,5))"), "{meta}");
    let out = path(dir.path(), "finite.csv");
    let o = run(&["estimate-finite", "--sample", &s, "--u-grid", "0.0025:0.25:50", "--w", "0.5", "--xstar", "1.5", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "u,xi_hat,se,ci_lo,ci_hi,p_left,p_right,p_two,degenerate");
    assert_eq!(data_rows(&csv).len(), 50);
    // identical inputs give identical output
    let again = run(&["estimate-finite", "--sample", &s, "--u-grid", "0.0025:0.25:50"]);
    assert_eq!(stdout(&again), csv);
}

#[test]
fn limit_sweep_over_k_and_v() {
    let dir = tempfile::tempdir().unwrap();
    let s = path(dir.path(), "fgm.csv");
    assert!(run(&["sample", "--model1", "fgm(0)", "--model2", "fgm(1)", "--n", "5000", "--out", &s]).status.success());
    let o = run(&["estimate-limit", "--sample", &s, "--k", "100:300:3", "--v", "0.05,0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(data_rows(&csv).len(), 6);
    assert!(csv.contains("# split=none"));
    let o = run(&["estimate-limit", "--sample", &s, "--k", "200", "--split", "halves", "--case2-kappa", "2", "--case2-tau", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("CaseII"));
}

#[test]
fn study_presets_follow_the_study_type() {
    let o = run(&["simulate", "--case", "ii", "--print-spec"]);
    assert!(stdout(&o).contains("xstar=1.5\n"));
    let o = run(&["empirical", "--case", "iii", "--print-spec", "--set", "k_fixed=80"]);
    let text = stdout(&o);
    assert!(text.contains("xstar=0.5\n") && text.contains("k_fixed=80\n") && text.contains("split=halves\n"), "{text}");
    let o = run(&["empirical", "--case", "v", "--print-spec"]);
    assert!(stdout(&o).contains("split=none\n"));
    assert_eq!(run(&["simulate", "--set", "nonsense=1", "--print-spec"]).status.code(), Some(2));
}

#[test]
fn small_simulation_writes_tables_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = path(dir.path(), "spec.txt");
    fs::write(&spec, "n=2000\nu_grid=0.05:0.25:5\nk_grid=50:150:3\nv_grid=0.05:0.15:3\nk_fixed=100\nxstar_v_grid=0.05,0.1\nreference_draws=100000\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["simulate", "--case", "iii", "--spec", &spec, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["sim_iii_finite.csv", "sim_iii_vary_k.csv", "sim_iii_vary_v.csv", "sim_iii_xstar.csv", "sim_iii_finite_estimate.svg", "sim_iii_xstar.svg"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let finite = fs::read_to_string(out.join("sim_iii_finite.csv")).unwrap();
    assert!(finite.contains("# n=2000\n"));
    assert_eq!(data_rows(&finite).len(), 5);
}

#[test]
fn filter_then_empirical_case() {
    let dir = tempfile::tempdir().unwrap();
    let periods = synthetic_prices(11).unwrap();
    let mut files = Vec::new();
    for s in &periods[0] {
        let p = path(dir.path(), &format!("{}.csv", s.name));
        let body: String = s.dates.iter().zip(&s.prices).map(|(d, p)| format!("{d},{p}\n")).collect();
        fs::write(&p, format!("date,price\n{body}")).unwrap();
        files.push(p);
    }
    let pseudo = path(dir.path(), "pseudo.csv");
    let fits = path(dir.path(), "fits.csv");
    let mut args = vec!["filter"];
    args.extend(files.iter().map(String::as_str));
    args.extend(["--innovation", "normal", "--out", &pseudo, "--fits", &fits]);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&pseudo).unwrap();
    assert_eq!(csv.lines().find(|l| !l.starts_with('#')).unwrap(), "date,SP500,FTSE,NIKKEI");
    assert_eq!(data_rows(&csv).len(), 1153);
    assert_eq!(data_rows(&fs::read_to_string(&fits).unwrap()).len(), 3);

    let out = dir.path().join("emp");
    let o = run(&["empirical", "--case", "i", "--pseudo", &pseudo, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("emp_i_finite.csv")).unwrap();
    assert_eq!(data_rows(&table).len(), 50);
    assert!(table.contains("# limit_split=halves"));
    // case v needs a second period
    let o = run(&["empirical", "--case", "v", "--pseudo", &pseudo, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn validation_studies() {
    let o = run(&["moment-check", "--model1", "fgm(0.5)", "--pairing", "countermonotone", "--reps", "500"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&stdout(&o)).len(), 10);
    let o = run(&["coverage", "--model1", "fgm(0.5)", "--n", "2000", "--reps", "100", "--u", "0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("truth,0,"), "{text}");
    let o = run(&["coverage", "--model1", "fgm(0.5)", "--reps", "20"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["coverage", "--model1", "fgm(0.5)", "--pairing", "countermonotone", "--model2", "fgm(0.5)", "--reps", "100"]);
    assert_eq!(o.status.code(), Some(2));
}
