//! `sw-lab`: configuration, orchestration and reporting around `sw-core`.
//!
//! [`run`] resolves a [`RunConfig`], runs one command inside a worker pool of
//! the requested size, writes the CSV tables and a `manifest.json`, and maps
//! the outcome to an exit status.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub mod cli;
mod commands;
pub mod config;
pub mod selftest;

pub use cli::{Cli, Cmd, Fault};
pub use config::{Command, MeasureInput, RunConfig, THREADS_ENV};

/// Exit status for a failed check.
pub const EXIT_CHECK: u8 = 1;
/// Exit status for an invalid configuration.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for a runtime or resource failure.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sw_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => EXIT_CONFIG,
            LabError::Core(sw_core::Error::Input(_) | sw_core::Error::DimensionMismatch { .. }) => {
                EXIT_CONFIG
            }
            _ => EXIT_RUNTIME,
        }
    }
}

/// Verdict of one named criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    outputs: Vec<String>,
    checks: &'a [Check],
    notes: &'a [String],
}

fn env_threads() -> Result<Option<usize>, LabError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| LabError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        _ => Ok(None),
    }
}

/// Resolves the full configuration for `cli` without running anything.
pub fn resolve(cli: &Cli) -> Result<RunConfig, LabError> {
    let file = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    file.merge(cli.common.overrides())
        .resolve(cli.command.kind(), env_threads()?)
}

/// Runs `command` under `config` in a dedicated pool and writes all artifacts.
pub fn execute(command: &Cmd, config: &RunConfig) -> Result<Outcome, LabError> {
    let out = config.out.clone().expect("resolved config has an output path");
    std::fs::create_dir_all(&out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::Config(format!("cannot start {:?} worker threads: {e}", config.threads)))?;
    let mut outcome = pool.install(|| commands::dispatch(command, config, &out))?;
    let manifest = out.join("manifest.json");
    write_manifest(&manifest, command.kind(), config, &outcome)?;
    outcome.outputs.push(manifest);
    Ok(outcome)
}

fn write_manifest(path: &Path, command: Command, config: &RunConfig, outcome: &Outcome) -> Result<(), LabError> {
    let manifest = Manifest {
        tool: "sw-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config,
        outputs: outcome
            .outputs
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        checks: &outcome.checks,
        notes: &outcome.notes,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Io(e.into()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// The whole program: returns the process exit status.
pub fn run(cli: &Cli) -> u8 {
    let result = resolve(cli).and_then(|config| execute(&cli.command, &config));
    match result {
        Err(e) => {
            eprintln!("sw-lab: {e}");
            e.exit_code()
        }
        Ok(outcome) => {
            for path in &outcome.outputs {
                println!("wrote {}", path.display());
            }
            for note in &outcome.notes {
                println!("note: {note}");
            }
            for check in &outcome.checks {
                let verdict = if check.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {}", check.name, check.detail);
            }
            match outcome.first_failure() {
                Some(failed) => {
                    eprintln!("sw-lab: check failed: {}", failed.name);
                    EXIT_CHECK
                }
                None => 0,
            }
        }
    }
}
