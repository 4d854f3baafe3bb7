//! Append-only run manifest (`manifest.jsonl`): one JSON record per line,
//! written before results so an interrupted run still leaves an audit
//! trail sufficient to re-run the experiment.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ManifestRecord {
    Run {
        command: String,
        config_path: String,
        config_hash: String,
        seed: Option<u64>,
        tool_version: String,
        workers: usize,
        started_at: String,
    },
    Stage {
        stage: String,
        evaluations: u64,
        failures: u64,
        finished_at: String,
    },
    Done {
        status: String,
        finished_at: String,
    },
}

pub struct RunManifest {
    path: PathBuf,
}

impl RunManifest {
    /// Opens the manifest and appends the run header. Never truncates:
    /// reruns into the same directory extend the audit trail.
    pub fn begin(
        out_dir: &Path,
        command: &str,
        config_path: &Path,
        config_bytes: &[u8],
        seed: Option<u64>,
        workers: usize,
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            path: out_dir.join("manifest.jsonl"),
        };
        manifest.append(&ManifestRecord::Run {
            command: command.to_string(),
            config_path: config_path.display().to_string(),
            config_hash: format!("fnv1a64:{:016x}", fnv1a64(config_bytes)),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            workers,
            started_at: now(),
        })?;
        Ok(manifest)
    }

    pub fn stage(&self, stage: &str, evaluations: u64, failures: u64) -> CliResult<()> {
        self.append(&ManifestRecord::Stage {
            stage: stage.to_string(),
            evaluations,
            failures,
            finished_at: now(),
        })
    }

    pub fn done(&self) -> CliResult<()> {
        self.append(&ManifestRecord::Done {
            status: "ok".to_string(),
            finished_at: now(),
        })
    }

    fn append(&self, record: &ManifestRecord) -> CliResult<()> {
        let line = serde_json::to_string(record)
            .map_err(|e| CliError::io("manifest", e.to_string()))?;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| {
                CliError::io("manifest", format!("{}: {e}", self.path.display()))
            })?;
        writeln!(file, "{line}").map_err(|e| CliError::io("manifest", e.to_string()))
    }
}

/// Reads all records back (used by tests auditing evaluation budgets).
pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io("manifest", format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| CliError::io("manifest", format!("bad record: {e}")))
        })
        .collect()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// FNV-1a over the raw config bytes; an audit fingerprint, not a
/// cryptographic digest.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
