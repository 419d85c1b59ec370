//! The run manifest: everything needed to reproduce or audit a training run.
//!
//! `train` writes it **after** every other artifact, so the presence of a
//! manifest certifies a complete run. It carries the resolved config echo,
//! the exact member seeds, the dataset fingerprint, and the leak audit —
//! the largest series index any training sample touched, which must stay
//! below the training boundary.

use crate::config::{DatasetStamp, ExperimentConfig};
use crate::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";

/// One ensemble member's artifacts, paths relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub index: usize,
    pub seed: u64,
    pub checkpoint: String,
    pub runlog: String,
    pub trajectory: String,
}

/// Proof that training never read beyond the allowed history: the largest
/// series index any sampled window or target touched, and how far that
/// stayed from the training boundary (0 = the most recent allowed origin
/// was used, as expected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakAudit {
    pub max_origin_index_used: usize,
    pub min_leak_headroom: usize,
    /// Smallest training boundary across the dataset; every sampled index
    /// is below it.
    pub earliest_train_end: usize,
}

/// The complete run record, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// The subcommand that produced this run.
    pub command: String,
    /// Resolved config echo (defaults filled in, seeds made explicit).
    pub config: ExperimentConfig,
    pub member_seeds: Vec<u64>,
    pub dataset: DatasetStamp,
    /// Series too short for the requested split, dropped before training.
    pub excluded_series: Vec<String>,
    pub split_mode: String,
    pub policy: String,
    pub members: Vec<MemberRecord>,
    pub leak_audit: LeakAudit,
}

impl Manifest {
    pub fn save(&self, run_dir: &Path) -> CliResult<()> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(CliError::runtime)?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Runtime(format!("manifest {}: {e}", path.display())))
    }

    /// Load a run's manifest; its absence means the run never completed, so
    /// downstream commands treat that as invalid input.
    pub fn load(run_dir: &Path) -> CliResult<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))
    }
}
