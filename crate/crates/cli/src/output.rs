//! Atomic file output and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cavity_core::Error;
use serde::Serialize;
use serde_json::{Map, Value};

/// Errors surfaced by the front end, each mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad spec file, bad flag value or unwritable output.
    Input(String),
    /// Anything that went wrong after the input was accepted.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    pub fn flag(name: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Input(format!("--{name}: {reason}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Run(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::Schema { .. }
            | Error::InvalidField { .. }
            | Error::Io { .. }
            | Error::UnsupportedPolarization(_) => CliError::Input(e.to_string()),
            e => CliError::Run(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("io error on {}: {e}", path.display()))
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// Record of one invocation, written as `manifest.json` in the output
/// directory once every other output is in place.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub spec_path: Option<String>,
    /// Spec after validation, in file form.
    pub spec: Option<Value>,
    /// Every option value in effect, defaults included.
    pub options: Map<String, Value>,
    pub outputs: Vec<String>,
    pub diagnostics: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip)]
    started: Option<Instant>,
    #[serde(skip)]
    out: PathBuf,
}

impl RunManifest {
    pub fn new(subcommand: &str, out: &Path, timing: bool) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            spec_path: None,
            spec: None,
            options: Map::new(),
            outputs: Vec::new(),
            diagnostics: Map::new(),
            wall_time_s: None,
            started: timing.then(Instant::now),
            out: out.to_path_buf(),
        }
    }

    pub fn option(&mut self, key: &str, value: impl Into<Value>) {
        self.options.insert(key.to_string(), value.into());
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Value>) {
        self.diagnostics.insert(key.to_string(), value.into());
    }

    /// Writes `contents` to `name` inside the output directory and records it.
    pub fn emit(&mut self, name: &str, contents: &str) -> CliResult<()> {
        write_atomic(&self.out.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.wall_time_s = self.started.map(|t| t.elapsed().as_secs_f64());
        let text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Run(e.to_string()))? + "\n";
        write_atomic(&self.out.join("manifest.json"), &text)
    }
}
