//! Library half of the `symchain` binary: argument types, command dispatch
//! and the artifact writers. `main.rs` only parses and maps the exit code.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use symchain::table::Table;
use symchain::{DensityTrace, TimeGrid};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "symchain", version, about = "Central-symmetry analysis of continuous-time Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Check that the input is a valid generator.
    Validate,
    /// Detect a central symmetry and write its certificate.
    Symmetry,
    /// Transition probabilities on a time grid, plus the stationary law.
    Transient,
    /// First-passage density to the central state and avoiding probabilities,
    /// each computed two ways.
    Passage,
    /// Closed forms of the birth-death process with jumps to 0.
    Bdjump,
    /// Strong-similarity transform of a symmetric chain.
    Similarity,
    /// Monte Carlo estimates with standard errors.
    Simulate,
    /// Data files behind the first-passage and avoiding-probability figure.
    Figure1,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Chain or model definition (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, default_value = "symchain-out")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, default_value_t = 5.0)]
    pub t_max: f64,
    #[arg(long, global = true, default_value_t = 500)]
    pub steps: usize,
    /// Uniformization tolerance (transient, passage) or detection tolerance
    /// (symmetry).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = symchain::bdjump::DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
    #[arg(long, global = true, default_value_t = symchain::bdjump::DEFAULT_SERIES_TOL)]
    pub series_tol: f64,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Start state.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<i64>,
    /// Target state.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<i64>,
    /// Half-width of the truncation window for models on the integers.
    #[arg(long, global = true, default_value_t = 40)]
    pub window: i64,
    /// Similarity weights (JSON `{"beta": [...]}`).
    #[arg(long, global = true)]
    pub beta: Option<PathBuf>,
    /// Report errors on stderr as JSON.
    #[arg(long, global = true)]
    pub json_errors: bool,
}

/// One validated invocation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub options: Options,
    pub grid: TimeGrid,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] symchain::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 2 for bad input, 3 when a numerical identity fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::CheckFailed(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Core(e) => {
                let debug = format!("{e:?}");
                debug.split([' ', '(', '{']).next().unwrap_or_default().to_string()
            }
            CliError::Io { .. } => "Io".into(),
            CliError::Parse { .. } => "Parse".into(),
            CliError::Usage(_) => "Usage".into(),
            CliError::CheckFailed(_) => "CheckFailed".into(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl RunSpec {
    pub fn new(command: Command, options: Options) -> CliResult<Self> {
        if options.steps < 2 {
            return Err(CliError::Usage(format!("--steps must be >= 2 (got {})", options.steps)));
        }
        let grid = TimeGrid::new(options.t_max, options.steps)?;
        Ok(RunSpec { command, options, grid })
    }
}

/// Agreement of two traces on a shared grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_abs_diff: f64,
    pub argmax_t: f64,
    pub pass: bool,
}

pub fn compare_report(a: &DensityTrace, b: &DensityTrace, tol: f64) -> symchain::Result<CompareReport> {
    let (max_abs_diff, i) = a.max_abs_diff(b)?;
    Ok(CompareReport { max_abs_diff, argmax_t: a.grid.point(i), pass: max_abs_diff <= tol })
}

/// Files written by one command, recorded in the manifest.
pub(crate) struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub(crate) fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(name, &text)
    }

    pub(crate) fn csv(&mut self, name: &str, table: &Table) -> CliResult<()> {
        self.write(name, &table.to_csv())
    }

    fn finish(mut self, spec: &RunSpec, parameters: Value, tolerances: Value) -> CliResult<()> {
        let manifest = json!({
            "tool": "symchain",
            "version": env!("CARGO_PKG_VERSION"),
            "command": spec.command,
            "input": spec.options.input.as_ref().map(|p| p.display().to_string()),
            "parameters": parameters,
            "tolerances": tolerances,
            "seed": if spec.command == Command::Simulate { Some(spec.options.seed) } else { None },
            "files": self.files.clone(),
        });
        self.json("manifest.json", &manifest)
    }
}

/// What a command produced: its stdout summary plus manifest details.
pub(crate) struct Outcome {
    pub summary: Value,
    pub parameters: Value,
    pub tolerances: Value,
    /// A failed numerical check, reported after every file is written.
    pub failure: Option<String>,
}

/// Execute `spec`, write its artifacts and return the stdout summary.
pub fn run(spec: &RunSpec) -> CliResult<Value> {
    if spec.command == Command::Validate {
        return commands::validate(spec);
    }
    let mut out = Artifacts::new(&spec.options.output_dir)?;
    let outcome = match spec.command {
        Command::Validate => unreachable!(),
        Command::Symmetry => commands::symmetry(spec, &mut out)?,
        Command::Transient => commands::transient(spec, &mut out)?,
        Command::Passage => commands::passage(spec, &mut out)?,
        Command::Bdjump => commands::bdjump(spec, &mut out)?,
        Command::Similarity => commands::similarity(spec, &mut out)?,
        Command::Simulate => commands::simulate(spec, &mut out)?,
        Command::Figure1 => commands::figure1(spec, &mut out)?,
    };
    out.finish(spec, outcome.parameters, outcome.tolerances)?;
    match outcome.failure {
        Some(what) => Err(CliError::CheckFailed(what)),
        None => Ok(outcome.summary),
    }
}
