//! CSV tables and JSON sidecars.
//!
//! Every file starts with a `# config_sha256=` line and a `# generated_unix=`
//! line; only the latter changes between reruns of the same config.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const TIMESTAMP_PREFIX: &str = "# generated_unix=";

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::S(b.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format_float(*x),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Output directory plus the digest stamped into every file.
#[derive(Clone, Debug)]
pub struct Sink {
    pub dir: PathBuf,
    pub digest: String,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: PathBuf, digest: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(Sink { dir, digest, written: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# config_sha256={}", self.digest).map_err(|e| io_error(&path, e))?;
        writeln!(out, "{TIMESTAMP_PREFIX}{}", unix_now()).map_err(|e| io_error(&path, e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&table.header).map_err(|e| io_error(&path, e))?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `{experiment, library_version, config, config_sha256,
    /// generated_unix, ...extra}` as pretty JSON.
    pub fn sidecar<C: Serialize>(&mut self, name: &str, experiment: &str, config: &C, extra: Value) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let mut doc = json!({
            "experiment": experiment,
            "library_version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "config_sha256": self.digest,
            "generated_unix": unix_now(),
        });
        if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
            d.extend(e);
        }
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Reads `m`, `p0` and (optionally) `stderr` columns from a curve CSV,
/// skipping `#` lines.
pub fn read_curve_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| CliError::Config(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (im, ip) = match (col("m"), col("p0")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Config(format!("{} needs `m` and `p0` columns", path.display()))),
    };
    let is = col("stderr");
    let (mut m, mut p, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i].trim().parse().map_err(|_| CliError::Config(format!("bad number `{}` in {}", &rec[i], path.display())))
        };
        m.push(num(im)?);
        p.push(num(ip)?);
        if let Some(i) = is {
            s.push(num(i)?);
        }
    }
    Ok((m, p, is.map(|_| s)))
}
