//! Exit codes, run manifests and file writers shared by all commands.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Version of the JSON documents written by this tool.
pub const SCHEMA_VERSION: u32 = 1;

/// Default manifest timestamp. Fixed so that repeated runs are byte-identical.
pub const DEFAULT_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Oracle(String),
    NotConverged(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid input: {m}"),
            CliError::Oracle(m) => write!(f, "oracle failure: {m}"),
            CliError::NotConverged(m) => write!(f, "calibration did not converge: {m}"),
            CliError::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

impl From<sigmoid_moments::Error> for CliError {
    fn from(e: sigmoid_moments::Error) -> Self {
        use sigmoid_moments::Error as E;
        match e {
            E::Cell { .. } | E::Estimation(_) => CliError::Oracle(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// What was run, with which flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub library_version: String,
}

impl RunManifest {
    /// Records every field of `args` as a parameter.
    pub fn new(command: &str, args: &impl Serialize, seed: Option<u64>, timestamp: &str) -> CliResult<Self> {
        let parameters = match serde_json::to_value(args)? {
            Value::Object(map) => map.into_iter().collect(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        Ok(Self {
            command: command.to_string(),
            parameters,
            seed,
            timestamp: timestamp.to_string(),
            library_version: sigmoid_moments::VERSION.to_string(),
        })
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Pretty JSON with a trailing newline.
pub fn to_json(value: &impl Serialize) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    fs::write(path, to_json(value)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

/// `dir/name.csv` becomes `dir/name.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
