use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{CliError, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    /// 17 significant digits, so every `f64` round-trips.
    fn csv_text(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Float(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or_else(|| Value::String(v.to_string()), Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rows of named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(CliError::io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv_text)).map_err(CliError::io)?;
                }
                w.into_inner().map_err(|e| CliError::io(e.into_error()))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self.columns.iter().map(|c| c.to_string()).zip(row.iter().map(Cell::json)).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&rows).map_err(CliError::io)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_sha256: String,
    pub payload_sha256: String,
    pub seed: Option<u64>,
    pub version: &'static str,
    /// Seconds since the Unix epoch; not part of any hash.
    pub timestamp: u64,
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// `out` with `tag` spliced before the extension.
pub fn tagged_path(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    out.with_file_name(name)
}

pub struct Context<'a> {
    pub command: &'a [String],
    pub config_text: &'a str,
    pub seed: Option<u64>,
    pub format: Format,
    pub out: Option<&'a Path>,
    /// Directory relative paths in the config resolve against.
    pub base_dir: &'a Path,
}

impl Context<'_> {
    /// Writes `payload` to `path` (or stdout) plus its manifest sidecar.
    pub fn emit(&self, payload: &[u8], path: Option<&Path>, notes: &[String]) -> Result<(), CliError> {
        let Some(path) = path else {
            std::io::stdout().write_all(payload).map_err(CliError::io)?;
            return Ok(());
        };
        std::fs::write(path, payload).map_err(CliError::io)?;
        let manifest = RunManifest {
            command: self.command.to_vec(),
            config_sha256: sha256_hex(self.config_text.as_bytes()),
            payload_sha256: sha256_hex(payload),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            notes: notes.to_vec(),
        };
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(CliError::io)?;
        text.push(b'\n');
        std::fs::write(manifest_path(path), text).map_err(CliError::io)
    }
}
