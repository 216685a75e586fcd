use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::CliError;

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i8> for Cell {
    fn from(v: i8) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// 17 significant digits in scientific notation: round-trips every double.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders rows to CSV bytes; the same rows always give the same bytes.
pub fn csv_bytes(header: &[&str], rows: &[Vec<Cell>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(header).map_err(err)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(CliError::Io(std::io::Error::other(format!(
                "row has {} fields, header {}",
                r.len(),
                header.len()
            ))));
        }
        w.write_record(r.iter().map(Cell::render)).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub kind: &'static str,
    /// Data rows (CSV only).
    pub rows: Option<usize>,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

/// Collects artifacts of one run; every file is written as soon as it is
/// produced so partial results survive a later failure.
pub struct Output {
    pub dir: PathBuf,
    pub artifacts: Vec<Artifact>,
    pub timings: Vec<Timing>,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, artifacts: Vec::new(), timings: Vec::new() })
    }

    fn write(&mut self, name: &str, kind: &'static str, bytes: &[u8], rows: Option<usize>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.to_string(), kind, rows, sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<PathBuf, CliError> {
        let bytes = csv_bytes(header, rows)?;
        self.write(name, "csv", &bytes, Some(rows.len()))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        bytes.push(b'\n');
        self.write(name, "json", &bytes, None)
    }

    pub fn time<R>(&mut self, phase: &str, f: impl FnOnce() -> R) -> R {
        let t0 = Instant::now();
        let r = f();
        self.timings.push(Timing { phase: phase.to_string(), seconds: t0.elapsed().as_secs_f64() });
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub shocktube: &'static str,
    pub shocktube_cli: &'static str,
}

pub const VERSIONS: Versions = Versions { shocktube: shocktube::VERSION, shocktube_cli: env!("CARGO_PKG_VERSION") };

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub config: Value,
    /// SHA-256 of the compact JSON of the fully resolved config.
    pub config_sha256: String,
    pub versions: Versions,
    pub workers: usize,
    pub timings: Vec<Timing>,
    pub total_seconds: f64,
    /// Every file of the run except the manifest itself.
    pub artifacts: Vec<Artifact>,
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<PathBuf, CliError> {
    let path = dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(m).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    bytes.push(b'\n');
    fs::write(&path, bytes)?;
    Ok(path)
}
