//! CSV and key=value file formats.
//!
//! Matrices are written headerless. The reader tolerates a header row and a
//! leading non-numeric column (typically a date), so spreadsheet exports load
//! without preprocessing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};

use crate::copulas::{CopulaModel, PairedSample, Pairing};
use crate::error::{Error, Result};

fn records(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: record {}: {e}", path.display(), i + 1)))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push(rec.iter().map(str::to_owned).collect());
    }
    Ok(out)
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

/// Rows of a CSV split into an optional leading label column and numbers.
struct NumericRows {
    labels: Option<Vec<String>>,
    values: Vec<Vec<f64>>,
}

fn numeric_rows(path: &Path) -> Result<NumericRows> {
    let mut rows = records(path)?;
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }
    // a label column is non-numeric in every row below the (possible) header
    let body = if rows.len() > 1 { &rows[1..] } else { &rows[..] };
    let label_col = body.iter().all(|r| r.first().is_some_and(|f| !is_number(f)));
    let start = usize::from(label_col);
    // a header is a first row that is not entirely numeric past the label column
    if rows[0].iter().skip(start).any(|f| !is_number(f)) {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: header without data", path.display())));
    }
    let width = rows[0].len();
    let mut labels = label_col.then(Vec::new);
    let mut values = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields, expected {width}",
                path.display(),
                i + 1,
                r.len()
            )));
        }
        if let Some(l) = labels.as_mut() {
            l.push(r[0].clone());
        }
        let nums = r[start..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Data(format!("{}: row {}: `{f}` is not a number", path.display(), i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(nums);
    }
    if values[0].is_empty() {
        return Err(Error::Data(format!("{}: no numeric columns", path.display())));
    }
    Ok(NumericRows { labels, values })
}

fn to_matrix(values: &[Vec<f64>]) -> Array2<f64> {
    let (n, d) = (values.len(), values[0].len());
    Array2::from_shape_fn((n, d), |(i, j)| values[i][j])
}

/// Reads an `n × d` numeric matrix, skipping a header row and a leading
/// label column when present.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    Ok(to_matrix(&numeric_rows(path.as_ref())?.values))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn write_all(path: &Path, text: &str) -> Result<()> {
    create(path)?.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes a headerless CSV using the shortest round-tripping float form.
pub fn write_matrix(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    let mut text = String::with_capacity(m.len() * 20);
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_all(path.as_ref(), &text)
}

/// Reads `key=value` lines, ignoring blanks and `#` comments.
pub fn read_key_values(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

pub fn format_key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> String {
    pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Description stored next to an exported sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub model1: Option<CopulaModel>,
    pub model2: Option<CopulaModel>,
    pub pairing: Pairing,
    pub seed: Option<u64>,
    pub d: usize,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// Writes the `n × 2d` CSV (first block, then second block) plus a
/// `.meta` sidecar.
pub fn write_sample(path: impl AsRef<Path>, sample: &PairedSample, meta: &SampleMeta) -> Result<()> {
    let path = path.as_ref();
    let d = sample.u1.ncols();
    let mut joined = Array2::zeros((sample.n(), 2 * d));
    joined.slice_mut(s![.., ..d]).assign(&sample.u1);
    joined.slice_mut(s![.., d..]).assign(&sample.u2);
    write_matrix(path, &joined)?;
    let show = |m: &Option<CopulaModel>| m.as_ref().map_or_else(|| "unknown".to_owned(), ToString::to_string);
    let text = format_key_values([
        ("model1", show(&meta.model1)),
        ("model2", show(&meta.model2)),
        ("pairing", meta.pairing.to_string()),
        ("seed", meta.seed.map_or_else(|| "none".to_owned(), |s| s.to_string())),
        ("d", d.to_string()),
        ("n", sample.n().to_string()),
    ]);
    write_all(&meta_path(path), &text)
}

/// Reads a sample written by [`write_sample`]. Without a sidecar the columns
/// are split evenly and the pairing is taken as independent.
pub fn read_sample(path: impl AsRef<Path>) -> Result<(PairedSample, SampleMeta)> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    let sidecar = meta_path(path);
    let meta = if sidecar.exists() {
        let kv = read_key_values(&sidecar)?;
        let model = |key: &str| -> Result<Option<CopulaModel>> {
            match kv.get(key).map(String::as_str) {
                None | Some("unknown") => Ok(None),
                Some(s) => s.parse().map(Some),
            }
        };
        let d = match kv.get("d") {
            Some(s) => s.parse().map_err(|_| Error::Data(format!("{}: bad d `{s}`", sidecar.display())))?,
            None => m.ncols() / 2,
        };
        let seed = match kv.get("seed").map(String::as_str) {
            None | Some("none") => None,
            Some(s) => Some(s.parse().map_err(|_| Error::Data(format!("{}: bad seed `{s}`", sidecar.display())))?),
        };
        SampleMeta {
            model1: model("model1")?,
            model2: model("model2")?,
            pairing: kv.get("pairing").map_or(Ok(Pairing::Independent), |s| s.parse())?,
            seed,
            d,
        }
    } else {
        SampleMeta {
            model1: None,
            model2: None,
            pairing: Pairing::Independent,
            seed: None,
            d: m.ncols() / 2,
        }
    };
    if meta.d == 0 || m.ncols() != 2 * meta.d {
        return Err(Error::Data(format!(
            "{}: expected {} columns for d={}, found {}",
            path.display(),
            2 * meta.d,
            meta.d,
            m.ncols()
        )));
    }
    let u1 = m.slice(s![.., ..meta.d]).to_owned();
    let u2 = m.slice(s![.., meta.d..]).to_owned();
    let mut sample = PairedSample::new(u1, u2, meta.pairing)?;
    sample.seed = meta.seed;
    Ok((sample, meta))
}

/// A dated price series.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub name: String,
    pub dates: Vec<String>,
    pub prices: Vec<f64>,
}

/// Reads a `date,price` CSV. The series name is the file stem.
pub fn read_prices(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let rows = numeric_rows(path)?;
    let dates = rows
        .labels
        .ok_or_else(|| Error::Data(format!("{}: expected a date column", path.display())))?;
    if rows.values[0].len() != 1 {
        return Err(Error::Data(format!(
            "{}: expected columns date,price; found {} numeric columns",
            path.display(),
            rows.values[0].len()
        )));
    }
    let mut seen = HashMap::new();
    for (i, d) in dates.iter().enumerate() {
        if let Some(j) = seen.insert(d.as_str(), i) {
            return Err(Error::Data(format!("{}: date `{d}` repeated on rows {} and {}", path.display(), j + 1, i + 1)));
        }
    }
    let name = path.file_stem().map_or_else(|| "series".to_owned(), |s| s.to_string_lossy().into_owned());
    Ok(PriceSeries {
        name,
        dates,
        prices: rows.values.into_iter().map(|r| r[0]).collect(),
    })
}

/// Restricts every series to the dates present in all of them, keeping the
/// order of the first series.
pub fn align_by_date(series: &[PriceSeries]) -> Result<(Vec<String>, Array2<f64>)> {
    let first = series.first().ok_or_else(|| Error::Data("no price series given".into()))?;
    let lookups: Vec<HashMap<&str, f64>> = series
        .iter()
        .map(|s| s.dates.iter().map(String::as_str).zip(s.prices.iter().copied()).collect())
        .collect();
    let dates: Vec<String> = first
        .dates
        .iter()
        .filter(|d| lookups.iter().all(|l| l.contains_key(d.as_str())))
        .cloned()
        .collect();
    if dates.len() < 3 {
        return Err(Error::Data(format!("only {} common dates across the series", dates.len())));
    }
    let m = Array2::from_shape_fn((dates.len(), series.len()), |(i, j)| lookups[j][dates[i].as_str()]);
    Ok((dates, m))
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => f.write_str("NA"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A named-column table with `#` comment lines written above the header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub provenance: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            provenance: Vec::new(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width mismatch in {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (`NA` and non-numeric cells become NaN).
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Num(v) => *v,
                    Cell::Int(v) => *v as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(ToString::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_all(path.as_ref(), &self.to_csv_string())
    }
}

/// Writes arbitrary text, creating parent directories.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_all(path.as_ref(), text)
}
