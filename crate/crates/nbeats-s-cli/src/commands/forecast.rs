//! `forecast`: roll the trained ensemble over a held-out window and export
//! the panel CSV.

use crate::commands::window_name;
use crate::config::ExperimentConfig;
use crate::manifest::Manifest;
use crate::panel::write_panel_csv;
use crate::{CliError, CliResult};
use nbeats_s::autodiff::ParameterSet;
use nbeats_s::data::Dataset;
use nbeats_s::eval::{roll_forecasts, EvalWindow, ForecastPanel};
use nbeats_s::model::Checkpoint;
use nbeats_s::trainer::ensemble_forecast;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// A run directory reloaded for evaluation: manifest, dataset, and member
/// parameters, cross-checked against each other.
pub struct LoadedRun {
    pub manifest: Manifest,
    pub config: ExperimentConfig,
    pub dataset: Dataset,
    pub members: Vec<ParameterSet>,
}

/// Reload a run directory. The dataset is re-read from its configured
/// source and must hash to the fingerprint recorded at training time.
pub fn load_run(run_dir: &Path) -> CliResult<LoadedRun> {
    let manifest = Manifest::load(run_dir)?;
    let config = manifest.config.clone();
    let (series, stamp) = config.dataset.load()?;
    if stamp.sha256 != manifest.dataset.sha256 {
        return Err(CliError::Config(format!(
            "dataset {} changed since training: sha256 {} was recorded, file now hashes to {}",
            stamp.source, manifest.dataset.sha256, stamp.sha256
        )));
    }
    let dataset = Dataset::new(series, config.split, config.split_mode());
    let mut members = Vec::with_capacity(manifest.members.len());
    for record in &manifest.members {
        let path = run_dir.join(&record.checkpoint);
        let checkpoint = Checkpoint::load(&path)
            .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))?;
        if checkpoint.config != config.model {
            return Err(CliError::Config(format!(
                "checkpoint {} was trained with a different model shape",
                path.display()
            )));
        }
        members.push(checkpoint.params);
    }
    if members.is_empty() {
        return Err(CliError::Config(format!(
            "run {} has no ensemble members",
            run_dir.display()
        )));
    }
    Ok(LoadedRun {
        manifest,
        config,
        dataset,
        members,
    })
}

/// Sweep the window with the ensemble-median forecaster.
pub fn ensemble_panel(run: &LoadedRun, window: EvalWindow) -> CliResult<ForecastPanel> {
    if window == EvalWindow::Validation && run.config.final_fit {
        return Err(CliError::Config(
            "this run merged the validation window into training; \
             only --window test is available"
                .into(),
        ));
    }
    let members: Vec<&ParameterSet> = run.members.iter().collect();
    let model = &run.config.model;
    let mut predictor = |batch: &nbeats_s::autodiff::Tensor| ensemble_forecast(&members, batch, model);
    roll_forecasts(
        &run.dataset,
        model.lookback_length,
        model.horizon,
        window,
        run.config.method_label(),
        &mut predictor,
    )
    .map_err(CliError::runtime)
}

pub fn run(run_dir: &Path, window: EvalWindow, out: Option<PathBuf>) -> CliResult<()> {
    let run = load_run(run_dir)?;
    let panel = ensemble_panel(&run, window)?;
    let out = out.unwrap_or_else(|| run_dir.join(format!("panel_{}.csv", window_name(window))));
    let file = std::fs::File::create(&out)
        .map_err(|e| CliError::Runtime(format!("panel {}: {e}", out.display())))?;
    write_panel_csv(&panel, BufWriter::new(file))?;

    let origins = panel.series.first().map(|s| s.forecasts.len()).unwrap_or(0);
    println!(
        "wrote {} forecasts ({} series × {origins} origins × horizon {}) to {}",
        panel.series.len() * origins * panel.horizon,
        panel.series.len(),
        panel.horizon,
        out.display()
    );
    if !panel.excluded.is_empty() {
        log::warn!(
            "{} series lacked the history to fill the first lookback window: {}",
            panel.excluded.len(),
            panel.excluded.join(", ")
        );
    }
    Ok(())
}
