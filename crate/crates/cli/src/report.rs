//! Run reports: canonical JSON, atomic file output and CSV tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Relative output paths resolve against this directory when it is set.
pub const REPORT_DIR_ENV: &str = "ZEROHOPF_REPORT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InputError,
    NumericalError,
}

#[derive(Debug, Clone, Serialize)]
pub struct Invocation {
    pub argv: Vec<String>,
    pub command: String,
    pub inputs: Value,
    /// Seed of any random sampling in the run.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub wall_time_s: f64,
    pub result: Value,
}

/// Self-contained record of one CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub invocation: Invocation,
    pub tolerances: Value,
    pub stages: Vec<Stage>,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(argv: &[String], command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            invocation: Invocation { argv: argv.to_vec(), command: command.into(), inputs: Value::Null, seed: None },
            tolerances: Value::Null,
            stages: Vec::new(),
            status: Status::Ok,
            exit_code: 0,
            error: None,
        }
    }

    /// Runs `f` as a named stage; its serialized output (or nothing, on error) is recorded.
    pub fn stage<T: Serialize>(&mut self, name: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f();
        let result = match &out {
            Ok(v) => to_value(v)?,
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        };
        self.stages.push(Stage { name: name.into(), wall_time_s: start.elapsed().as_secs_f64(), result });
        out
    }

    pub fn fail(&mut self, e: &CliError) {
        self.status = if e.exit_code() == 2 { Status::NumericalError } else { Status::InputError };
        self.exit_code = e.exit_code();
        self.error = Some(e.to_string());
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(format!("serialization failed: {e}")))
}

/// Pretty JSON with sorted keys and shortest round-trip floats; parsing and
/// re-serializing the output reproduces it byte for byte.
pub fn canonical_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let value = to_value(v)?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(REPORT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    let path = resolve(path);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, &path).map_err(io)?;
    Ok(path)
}

/// A CSV table with a fixed header; numbers use shortest round-trip formatting.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal, with an exponent for very small or large values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).unwrap_or_else(|_| format!("{v}"))
    } else {
        format!("{v}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
