//! `grid`: hyperparameter sweep. Every cell of the cartesian product trains
//! a single run (no ensembling) and is scored by rolling sMAPE on the
//! validation window — the test window is never touched here. Failed cells
//! are recorded and the sweep continues; only an entirely failed grid is an
//! error.

use crate::config::{CellAssignment, ExperimentConfig, GridSpec};
use crate::{CliError, CliResult};
use nbeats_s::data::{Dataset, SplitMode};
use nbeats_s::eval::{roll_forecasts, score, EvalWindow};
use nbeats_s::model::forward;
use nbeats_s::trainer::train;
use rayon::prelude::*;
use std::path::Path;

pub const REPORT_FILE: &str = "grid_report.csv";
pub const WINNER_FILE: &str = "winning_config.json";

struct CellResult {
    index: usize,
    assignment: CellAssignment,
    outcome: Result<f64, String>,
}

pub fn run(config_path: &Path, grid_path: &Path, out_dir: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("config {}: {e}", config_path.display())))?;
    let base: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", config_path.display())))?;
    let base_config: ExperimentConfig = serde_json::from_value(base.clone())
        .map_err(|e| CliError::Config(format!("config {}: {e}", config_path.display())))?;
    base_config.validate()?;
    if base_config.final_fit {
        return Err(CliError::Config(
            "grid selection needs a held-out validation window; set final_fit to false".into(),
        ));
    }
    let grid = GridSpec::load(grid_path)?;
    let cells = grid.cells();
    log::info!("sweeping {} cells over {:?}", cells.len(), {
        let names: Vec<&String> = grid.parameters.keys().collect();
        names
    });

    std::fs::create_dir_all(out_dir).map_err(CliError::runtime)?;
    let results: Vec<CellResult> = cells
        .into_par_iter()
        .enumerate()
        .map(|(index, assignment)| {
            let outcome = evaluate_cell(&base, &assignment);
            CellResult {
                index,
                assignment,
                outcome,
            }
        })
        .collect();
    for r in &results {
        match &r.outcome {
            Ok(smape) => log::info!("cell {}: validation sMAPE {smape:.4}", r.index),
            Err(e) => log::warn!("cell {} failed: {e}", r.index),
        }
    }

    // Ranked report: successful cells by ascending sMAPE, failures after.
    let parameter_names: Vec<String> = grid.parameters.keys().cloned().collect();
    let mut ranked: Vec<&CellResult> = results.iter().filter(|r| r.outcome.is_ok()).collect();
    ranked.sort_by(|a, b| {
        let (sa, sb) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
        sa.partial_cmp(sb)
            .expect("validation scores are finite")
            .then(a.index.cmp(&b.index))
    });
    let failed: Vec<&CellResult> = results.iter().filter(|r| r.outcome.is_err()).collect();

    let report_path = out_dir.join(REPORT_FILE);
    let mut writer = csv::Writer::from_path(&report_path).map_err(CliError::runtime)?;
    let mut header = vec!["cell".to_string()];
    header.extend(parameter_names.iter().cloned());
    header.extend(["validation_smape".to_string(), "status".to_string()]);
    writer.write_record(&header).map_err(CliError::runtime)?;
    for r in ranked.iter().chain(failed.iter()) {
        let mut record = vec![r.index.to_string()];
        record.extend(r.assignment.iter().map(|(_, v)| plain_value(v)));
        match &r.outcome {
            Ok(smape) => record.extend([smape.to_string(), "ok".to_string()]),
            Err(e) => record.extend([String::new(), e.clone()]),
        }
        writer.write_record(&record).map_err(CliError::runtime)?;
    }
    writer.flush().map_err(CliError::runtime)?;

    let Some(winner) = ranked.first() else {
        return Err(CliError::Runtime(format!(
            "every grid cell failed; see {}",
            report_path.display()
        )));
    };
    let winning = GridSpec::apply(&base, &winner.assignment)?;
    let winner_path = out_dir.join(WINNER_FILE);
    let text = serde_json::to_string_pretty(&winning).map_err(CliError::runtime)?;
    std::fs::write(&winner_path, text + "\n").map_err(CliError::runtime)?;

    println!(
        "swept {} cells ({} ok, {} failed); best validation sMAPE {:.4} at cell {}",
        results.len(),
        ranked.len(),
        failed.len(),
        winner.outcome.as_ref().unwrap(),
        winner.index
    );
    for (name, value) in &winner.assignment {
        println!("  {name} = {}", plain_value(value));
    }
    println!(
        "wrote {} and {}",
        report_path.display(),
        winner_path.display()
    );
    Ok(())
}

/// JSON scalars without quotes, composites as compact JSON.
fn plain_value(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Train one cell and score it on the validation window. Every failure is a
/// recorded string, not an abort: neighbouring cells may still succeed.
fn evaluate_cell(base: &serde_json::Value, assignment: &CellAssignment) -> Result<f64, String> {
    let config = GridSpec::apply(base, assignment).map_err(|e| e.to_string())?;
    if config.final_fit {
        return Err("cell sets final_fit, which has no validation window".into());
    }
    let (series, _) = config.dataset.load().map_err(|e| e.to_string())?;
    let dataset = Dataset::new(series, config.split, SplitMode::Tuning);
    if dataset.is_empty() {
        return Err("no series is long enough for the split".into());
    }
    let outcome =
        train(&dataset, &config.train_config(config.seed)).map_err(|e| e.to_string())?;

    let model = &config.model;
    let mut predictor =
        |batch: &nbeats_s::autodiff::Tensor| forward(batch, &outcome.params, model);
    let panel = roll_forecasts(
        &dataset,
        model.lookback_length,
        model.horizon,
        EvalWindow::Validation,
        config.method_label(),
        &mut predictor,
    )
    .map_err(|e| e.to_string())?;
    if panel.series.is_empty() {
        return Err("every series was excluded from the validation sweep".into());
    }
    let table = score(&panel).map_err(|e| e.to_string())?;
    Ok(table.summaries()[0].smape)
}
