//! Experiment and grid-search configuration files.
//!
//! Configs are strict JSON: unknown keys are rejected so a typo fails loudly
//! instead of silently falling back to a default. An [`ExperimentConfig`]
//! resolves to a library [`TrainConfig`] plus a dataset; a [`GridSpec`]
//! expands into one mutated config per grid cell.

use crate::{CliError, CliResult};
use nbeats_s::data::{
    ingest, synthesize, write_long, DataFormat, SplitMode, SplitSpec, SynthSpec, TimeSeries,
};
use nbeats_s::dlw::DlwConfig;
use nbeats_s::model::ModelConfig;
use nbeats_s::trainer::{self, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Where the series come from: a CSV file or the synthetic generator.
/// Exactly one of `path` and `synthetic` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// File layout; only meaningful with `path`. Defaults to `long`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthSpec>,
}

/// Identity of the loaded data, recorded in run manifests so later commands
/// can detect that the dataset changed between training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStamp {
    /// The file path, or `"synthetic"`.
    pub source: String,
    /// SHA-256 of the file bytes, or of the canonical long-CSV rendering for
    /// synthetic data.
    pub sha256: String,
    pub num_series: usize,
}

impl DatasetSource {
    pub fn validate(&self) -> CliResult<()> {
        match (&self.path, &self.synthetic) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "dataset: set either path or synthetic, not both".into(),
            )),
            (None, None) => Err(CliError::Config(
                "dataset: set one of path or synthetic".into(),
            )),
            (None, Some(_)) if self.format.is_some() => Err(CliError::Config(
                "dataset: format only applies to file sources".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Load the series and fingerprint them. File problems are config errors:
    /// they are detected before any artifact is written.
    pub fn load(&self) -> CliResult<(Vec<TimeSeries>, DatasetStamp)> {
        self.validate()?;
        if let Some(path) = &self.path {
            let bytes = std::fs::read(path).map_err(|e| {
                CliError::Config(format!("dataset {}: {e}", path.display()))
            })?;
            let format = self.format.unwrap_or(DataFormat::Long);
            let series = ingest(bytes.as_slice(), format).map_err(CliError::config)?;
            let stamp = DatasetStamp {
                source: path.display().to_string(),
                sha256: hex_sha256(&bytes),
                num_series: series.len(),
            };
            Ok((series, stamp))
        } else {
            let spec = self.synthetic.as_ref().expect("validated above");
            let series = synthesize(spec).map_err(CliError::config)?;
            let mut canonical = Vec::new();
            write_long(&series, &mut canonical).map_err(CliError::runtime)?;
            let stamp = DatasetStamp {
                source: "synthetic".into(),
                sha256: hex_sha256(&canonical),
                num_series: series.len(),
            };
            Ok((series, stamp))
        }
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Optimization settings, flattened for config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub iterations: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Sampling is restricted to the most recent N valid origins per series.
    pub origin_range: usize,
    /// Progress-line cadence (iterations); 0 silences progress logging.
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_log_every() -> usize {
    100
}

/// One experiment: dataset, split, network, optimization, λ policy, and
/// ensembling. This is the file handed to `train` and echoed into the run
/// manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitSpec,
    pub model: ModelConfig,
    pub training: TrainSettings,
    pub dlw: DlwConfig,
    /// Number of ensemble members when `seeds` is not given.
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
    /// Explicit member seeds; overrides `ensemble_size` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Master seed: member seeds derive from it when `seeds` is absent.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Merge the validation window into training (the final fit before
    /// test-window forecasting). Defaults to the tuning split.
    #[serde(default)]
    pub final_fit: bool,
    /// Label used for this run's forecasts in score tables. Defaults to the
    /// λ-policy name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method_name: Option<String>,
    /// Artifact root; the `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_ensemble_size() -> usize {
    5
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    /// Parse and validate a config file. Any problem is a config error.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.dataset.validate()?;
        self.train_config(self.seed).validate().map_err(CliError::config)?;
        match &self.seeds {
            Some(seeds) if seeds.is_empty() => {
                return Err(CliError::Config("seeds must not be empty".into()));
            }
            None if self.ensemble_size == 0 => {
                return Err(CliError::Config("ensemble_size must be positive".into()));
            }
            _ => {}
        }
        if matches!(&self.method_name, Some(name) if name.trim().is_empty()) {
            return Err(CliError::Config("method_name must not be blank".into()));
        }
        Ok(())
    }

    /// The library training config for one member seed.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            iterations: self.training.iterations,
            learning_rate: self.training.learning_rate,
            model: self.model.clone(),
            dlw: self.dlw.clone(),
            sampler: nbeats_s::data::SamplerConfig {
                batch_size: self.training.batch_size,
                origin_range: self.training.origin_range,
                seed: None,
            },
            seed,
            log_every: self.training.log_every,
        }
    }

    /// Member seeds: explicit ones verbatim, otherwise derived from the
    /// master seed.
    pub fn member_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(seeds) => seeds.clone(),
            None => trainer::member_seeds(self.seed, self.ensemble_size),
        }
    }

    pub fn split_mode(&self) -> SplitMode {
        if self.final_fit {
            SplitMode::FinalFit
        } else {
            SplitMode::Tuning
        }
    }

    /// Score-table label for this run's forecasts.
    pub fn method_label(&self) -> String {
        self.method_name
            .clone()
            .unwrap_or_else(|| self.dlw.name().to_string())
    }
}

/// A hyperparameter sweep: named config paths (dot-separated, e.g.
/// `dlw.kappa` or `training.learning_rate`) each with a list of candidate
/// values. Cells are the cartesian product, selected by validation sMAPE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub parameters: BTreeMap<String, Vec<serde_json::Value>>,
    #[serde(default = "default_selection_metric")]
    pub selection_metric: String,
}

fn default_selection_metric() -> String {
    "validation_smape".into()
}

/// One cell's parameter assignments, in `parameters` key order.
pub type CellAssignment = Vec<(String, serde_json::Value)>;

impl GridSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("grid {}: {e}", path.display())))?;
        let spec: GridSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("grid {}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.parameters.is_empty() {
            return Err(CliError::Config("grid has no parameters".into()));
        }
        for (name, values) in &self.parameters {
            if values.is_empty() {
                return Err(CliError::Config(format!(
                    "grid parameter {name:?} has no candidate values"
                )));
            }
        }
        if self.selection_metric != "validation_smape" {
            return Err(CliError::Config(format!(
                "unsupported selection metric {:?}; only \"validation_smape\" is implemented",
                self.selection_metric
            )));
        }
        Ok(())
    }

    /// All cells, cartesian product in key order, first key slowest.
    pub fn cells(&self) -> Vec<CellAssignment> {
        let mut cells: Vec<CellAssignment> = vec![Vec::new()];
        for (name, values) in &self.parameters {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut next = cell.clone();
                        next.push((name.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        cells
    }

    /// Apply one cell's assignments to the base config JSON and re-validate.
    /// The leaf key may be new (a policy hyperparameter the base omits), but
    /// every intermediate segment must already exist as an object.
    pub fn apply(base: &serde_json::Value, cell: &CellAssignment) -> CliResult<ExperimentConfig> {
        let mut value = base.clone();
        for (path, v) in cell {
            set_path(&mut value, path, v.clone())?;
        }
        let config: ExperimentConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("grid cell produced an invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}

fn set_path(root: &mut serde_json::Value, path: &str, value: serde_json::Value) -> CliResult<()> {
    let mut segments = path.split('.').peekable();
    let mut cursor = root;
    while let Some(segment) = segments.next() {
        if segment.is_empty() {
            return Err(CliError::Config(format!(
                "grid parameter {path:?} has an empty path segment"
            )));
        }
        let object = cursor.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "grid parameter {path:?}: {segment:?} is not inside an object"
            ))
        })?;
        if segments.peek().is_none() {
            object.insert(segment.to_string(), value);
            return Ok(());
        }
        cursor = object.get_mut(segment).ok_or_else(|| {
            CliError::Config(format!(
                "grid parameter {path:?}: segment {segment:?} not found in the base config"
            ))
        })?;
    }
    unreachable!("split always yields at least one segment")
}
