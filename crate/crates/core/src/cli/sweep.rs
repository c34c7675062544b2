//! Parameter sweeps over `alpha_grid x chi_grid`.
//!
//! Each grid point is an ordinary run whose record lands under its own hash.
//! A point whose record already exists and verifies is not recomputed, so an
//! interrupted sweep picks up where it stopped.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{config_hash, run_dir, write_outcome, RunRecord, RECORD_FILE};
use super::{commands, output_dir, worker_count, CliError, RunConfig};

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub alpha: f64,
    pub chi: f64,
    pub hash: String,
    /// `ok`, `assertion_failed` or `error`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub computed: usize,
    pub reused: usize,
    pub failed: usize,
    pub index_path: PathBuf,
    pub entries: Vec<IndexEntry>,
}

enum PointResult {
    Reused(RunRecord),
    Computed(RunRecord),
    Failed(String),
}

fn existing(out: &std::path::Path, config: &RunConfig, hash: &str) -> Option<RunRecord> {
    let rec = RunRecord::load(&run_dir(out, hash).join(RECORD_FILE)).ok()?;
    (rec.verify() && rec.config.hashed_view() == config.hashed_view()).then_some(rec)
}

fn run_point(out: &std::path::Path, config: &RunConfig) -> PointResult {
    let hash = config_hash(config);
    if let Some(rec) = existing(out, config, &hash) {
        return PointResult::Reused(rec);
    }
    let start = Instant::now();
    let outcome = match commands::execute(config) {
        Ok(o) => o,
        Err(e) => return PointResult::Failed(e.to_string()),
    };
    match write_outcome(out, config, outcome, start.elapsed().as_secs_f64()) {
        Ok(rec) => PointResult::Computed(rec),
        Err(e) => PointResult::Failed(e.to_string()),
    }
}

/// Run every grid point of a normalized sweep config and write the index.
pub fn run_sweep(config: &RunConfig) -> Result<SweepSummary, CliError> {
    let alphas = config.alpha_grid.clone().unwrap_or_default();
    let chis = config.chi_grid.clone().unwrap_or_default();
    let mut points = Vec::with_capacity(alphas.len() * chis.len());
    for &a in &alphas {
        for &x in &chis {
            points.push((a, x, config.point(a, x).normalized()?));
        }
    }
    let out = output_dir(config);
    fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config)?)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let results: Vec<PointResult> = pool.install(|| points.par_iter().map(|(_, _, p)| run_point(&out, p)).collect());

    let (mut computed, mut reused, mut failed) = (0, 0, 0);
    let mut entries = Vec::with_capacity(points.len());
    for ((alpha, chi, p), result) in points.iter().zip(results) {
        let (record, error) = match result {
            PointResult::Reused(rec) => {
                reused += 1;
                (Some(rec), None)
            }
            PointResult::Computed(rec) => {
                computed += 1;
                (Some(rec), None)
            }
            PointResult::Failed(e) => (None, Some(e)),
        };
        let status = match &record {
            Some(rec) if rec.passed() => "ok",
            Some(_) => "assertion_failed",
            None => "error",
        };
        if status != "ok" {
            failed += 1;
        }
        entries.push(IndexEntry {
            alpha: *alpha,
            chi: *chi,
            hash: config_hash(p),
            status: status.to_string(),
            error,
        });
    }
    let index_path = out.join(INDEX_FILE);
    fs::write(&index_path, serde_json::to_string_pretty(&entries)? + "\n")?;
    Ok(SweepSummary { computed, reused, failed, index_path, entries })
}
