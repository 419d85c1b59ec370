//! `score`: compute per-series and dataset-level sMAPE/sMAPC for the run's
//! ensemble, optionally alongside the seasonal-naive baseline and forecast
//! panels imported from other tools.

use crate::commands::forecast::{ensemble_panel, load_run};
use crate::panel::{attach_actuals, read_panels_csv};
use crate::{CliError, CliResult};
use nbeats_s::eval::{roll_forecasts, score, seasonal_naive, EvalWindow, ScoreTable};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

/// Months per seasonal cycle; the baseline repeats the value one cycle back.
const PERIOD: usize = 12;

pub fn run(
    run_dir: &Path,
    window: EvalWindow,
    baseline: bool,
    imports: &[PathBuf],
    out: Option<PathBuf>,
) -> CliResult<()> {
    let run = load_run(run_dir)?;
    let horizon = run.config.model.horizon;

    let own = ensemble_panel(&run, window)?;
    let mut methods = vec![own.method.clone()];
    let mut tables = vec![score(&own).map_err(CliError::runtime)?];

    if baseline {
        // Same exclusion rule as the model when T ≥ 12, so both methods
        // cover the same series.
        let lookback = run.config.model.lookback_length.max(PERIOD);
        let mut predictor =
            |batch: &nbeats_s::autodiff::Tensor| seasonal_naive(batch, horizon, PERIOD);
        let naive = roll_forecasts(
            &run.dataset,
            lookback,
            horizon,
            window,
            "seasonal_naive",
            &mut predictor,
        )
        .map_err(CliError::runtime)?;
        methods.push(naive.method.clone());
        tables.push(score(&naive).map_err(CliError::runtime)?);
    }

    for path in imports {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::Config(format!("import {}: {e}", path.display())))?;
        for imported in read_panels_csv(BufReader::new(file))? {
            if imported.horizon != horizon {
                return Err(CliError::Config(format!(
                    "import {}: method {:?} has horizon {}, this run uses {horizon}",
                    path.display(),
                    imported.method,
                    imported.horizon
                )));
            }
            if methods.contains(&imported.method) {
                return Err(CliError::Config(format!(
                    "import {}: method name {:?} is already taken",
                    path.display(),
                    imported.method
                )));
            }
            let panel = attach_actuals(&imported, &run.dataset, window)?;
            methods.push(panel.method.clone());
            tables.push(score(&panel).map_err(CliError::config)?);
        }
    }

    let merged = ScoreTable::merged(tables);
    let out_dir = out.unwrap_or_else(|| run_dir.to_path_buf());
    std::fs::create_dir_all(&out_dir).map_err(CliError::runtime)?;
    let scores_path = out_dir.join("scores.csv");
    let summary_path = out_dir.join("summary.csv");
    let file = std::fs::File::create(&scores_path).map_err(CliError::runtime)?;
    merged
        .write_csv(BufWriter::new(file))
        .map_err(CliError::runtime)?;
    let file = std::fs::File::create(&summary_path).map_err(CliError::runtime)?;
    merged
        .write_summary_csv(BufWriter::new(file))
        .map_err(CliError::runtime)?;

    for s in merged.summaries() {
        println!(
            "{}: sMAPE {:.4}, sMAPC {:.4} ({} series)",
            s.method, s.smape, s.smapc, s.num_series
        );
    }
    println!(
        "wrote {} and {}",
        scores_path.display(),
        summary_path.display()
    );
    Ok(())
}
