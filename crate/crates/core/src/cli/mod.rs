//! The `lightcone` command-line front end.
//!
//! Every command reads a flat JSON config, applies `--key value` overrides,
//! runs, and writes `<output_dir>/<hash>/record.json` (plus `payload.json`
//! and, for gridded results, `profile.csv`).

pub mod commands;
pub mod config;
pub mod record;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::{load_config, parse_overrides, Command, RunConfig, DEFAULT_OUTPUT_DIR};
pub use record::{config_hash, Outcome, RunRecord};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "LIGHTCONE_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        use crate::Error as E;
        match e {
            E::InvalidInput(_) | E::UnsupportedRegime(_) | E::ResourceLimit(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("serialization error: {e}"))
    }
}

/// Worker count from the config, then the environment, then the machine.
pub fn worker_count(config: &RunConfig) -> Result<usize, CliError> {
    if let Some(w) = config.workers {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Invalid(format!("invalid value for `{WORKERS_ENV}`: `{s}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

pub fn output_dir(config: &RunConfig) -> PathBuf {
    PathBuf::from(config.output_dir.as_deref().unwrap_or(DEFAULT_OUTPUT_DIR))
}

/// Run one invocation end to end and report what happened on stdout.
pub fn run(command: Command, config_path: Option<&Path>, args: &[String]) -> Result<(), CliError> {
    faer::set_global_parallelism(faer::Par::Seq);
    let overrides = parse_overrides(args)?;
    let config = load_config(command, config_path, &overrides)?.normalized()?;
    if command == Command::Sweep {
        let summary = sweep::run_sweep(&config)?;
        println!(
            "sweep: {} computed, {} reused, {} failed; index at {}",
            summary.computed,
            summary.reused,
            summary.failed,
            summary.index_path.display()
        );
        return if summary.failed == 0 {
            Ok(())
        } else {
            Err(CliError::Runtime(format!("{} sweep points failed", summary.failed)))
        };
    }
    let workers = worker_count(&config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let start = Instant::now();
    let outcome = pool.install(|| commands::execute(&config))?;
    let record = record::write_outcome(&output_dir(&config), &config, outcome, start.elapsed().as_secs_f64())?;
    let dir = record::run_dir(&output_dir(&config), &record.hash);
    println!("{command}: wrote {}", dir.display());
    for (name, ok) in &record.assertions {
        println!("  {} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    if record.passed() {
        Ok(())
    } else {
        Err(CliError::Runtime("one or more assertions failed".into()))
    }
}
