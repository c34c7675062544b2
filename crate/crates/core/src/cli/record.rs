//! Result records and their on-disk layout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RECORD_FILE: &str = "record.json";
pub const PAYLOAD_FILE: &str = "payload.json";
pub const PROFILE_FILE: &str = "profile.csv";

/// Hex SHA-256 of the config's result-determining keys.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_vec(&config.hashed_view()).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))[..16].to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub hash: String,
    pub config: RunConfig,
    pub wall_time_s: f64,
    /// Counts and booleans describing where the results are in their
    /// validity regime.
    pub regime_flags: BTreeMap<String, Value>,
    /// Named checks and whether each passed.
    pub assertions: BTreeMap<String, bool>,
    pub payload: Value,
}

impl RunRecord {
    /// The stored hash matches one recomputed from the stored config.
    pub fn verify(&self) -> bool {
        config_hash(&self.config) == self.hash
    }

    pub fn passed(&self) -> bool {
        self.assertions.values().all(|&ok| ok)
    }

    pub fn load(path: &Path) -> Result<RunRecord, CliError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Output of one command before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub payload: Value,
    /// Rows `(j, r, t, value)` for `profile.csv`.
    pub rows: Option<Vec<(usize, f64, f64, f64)>>,
    pub regime_flags: BTreeMap<String, Value>,
    pub assertions: BTreeMap<String, bool>,
}

pub fn format_csv(rows: &[(usize, f64, f64, f64)]) -> String {
    let mut out = String::from("j,r,t,value\n");
    for (j, r, t, v) in rows {
        out.push_str(&format!("{j},{r:.16e},{t:.16e},{v:.16e}\n"));
    }
    out
}

pub fn run_dir(output_dir: &Path, hash: &str) -> PathBuf {
    output_dir.join(hash)
}

/// Write `payload.json`, the optional `profile.csv`, and `record.json`.
pub fn write_outcome(
    output_dir: &Path,
    config: &RunConfig,
    outcome: Outcome,
    wall_time_s: f64,
) -> Result<RunRecord, CliError> {
    let hash = config_hash(config);
    let dir = run_dir(output_dir, &hash);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(PAYLOAD_FILE), serde_json::to_string_pretty(&outcome.payload)? + "\n")?;
    if let Some(rows) = &outcome.rows {
        fs::write(dir.join(PROFILE_FILE), format_csv(rows))?;
    }
    let record = RunRecord {
        version: ARTIFACT_VERSION.to_string(),
        hash,
        config: config.hashed_view(),
        wall_time_s,
        regime_flags: outcome.regime_flags,
        assertions: outcome.assertions,
        payload: outcome.payload,
    };
    // Written last, so its presence marks a finished run.
    fs::write(dir.join(RECORD_FILE), serde_json::to_string_pretty(&record)? + "\n")?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_placement_and_tracks_content() {
        let a = RunConfig { alpha: Some(3.0), ..Default::default() };
        let b = RunConfig { workers: Some(8), output_dir: Some("elsewhere".into()), ..a.clone() };
        let c = RunConfig { alpha: Some(4.0), ..a.clone() };
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 16);
    }

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let text = format_csv(&[(3, 2.0, 0.1, 1.0 / 3.0)]);
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "3,2.0000000000000000e0,1.0000000000000001e-1,3.3333333333333331e-1");
        let back: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn written_record_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { alpha: Some(3.0), ..Default::default() };
        let outcome = Outcome { payload: serde_json::json!({"x": 1}), ..Default::default() };
        let rec = write_outcome(dir.path(), &cfg, outcome, 0.5).unwrap();
        let loaded = RunRecord::load(&run_dir(dir.path(), &rec.hash).join(RECORD_FILE)).unwrap();
        assert!(loaded.verify());
        assert_eq!(loaded, rec);
        let mut tampered = loaded.clone();
        tampered.config.alpha = Some(5.0);
        assert!(!tampered.verify());
    }
}
