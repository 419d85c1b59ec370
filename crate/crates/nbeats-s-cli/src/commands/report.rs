//! `report`: render diagnostic SVGs from whatever artifacts a directory
//! holds. Each plot is independent — a missing input skips that plot with a
//! warning instead of failing the command — and rendering is deterministic,
//! so re-running over unchanged inputs reproduces byte-identical files.
//!
//! Sources and outputs:
//!
//! - `manifest.json` + member 0 logs → `lambda_trajectory.svg`,
//!   `cosine_similarity.svg`, `training_losses.svg`
//! - `grid_report.csv` (single varied parameter) → `sweep_<param>.svg`
//! - `scores.csv` → `summary.csv`, `mcb_smape.svg`, `mcb_smapc.svg`

use crate::commands::grid::REPORT_FILE;
use crate::manifest::Manifest;
use crate::{CliError, CliResult};
use nbeats_s::dlw::TrajectoryPoint;
use nbeats_s::eval::{mcb, Metric, ScoreMatrix, ScoreTable, SignificanceLevel};
use nbeats_s::plot::{chart_svg, mcb_svg, ChartSpec, PlotSeries};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub fn run(run_dir: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let out_dir = out.unwrap_or_else(|| run_dir.join("report"));
    std::fs::create_dir_all(&out_dir).map_err(CliError::runtime)?;
    let mut written: Vec<PathBuf> = Vec::new();

    match Manifest::load(run_dir) {
        Ok(manifest) => render_member_plots(run_dir, &out_dir, &manifest, &mut written)?,
        Err(e) => log::warn!("skipping training plots: {e}"),
    }
    render_sweep_plot(run_dir, &out_dir, &mut written)?;
    render_score_artifacts(run_dir, &out_dir, &mut written)?;

    if written.is_empty() {
        return Err(CliError::Config(format!(
            "{} holds no reportable artifacts (manifest, {REPORT_FILE}, or scores.csv)",
            run_dir.display()
        )));
    }
    println!("wrote {} file(s) to {}:", written.len(), out_dir.display());
    for path in &written {
        println!("  {}", path.file_name().unwrap_or_default().to_string_lossy());
    }
    Ok(())
}

/// λ schedule, cosine similarity, and loss curves from member 0's logs.
fn render_member_plots(
    run_dir: &Path,
    out_dir: &Path,
    manifest: &Manifest,
    written: &mut Vec<PathBuf>,
) -> CliResult<()> {
    let Some(member) = manifest.members.first() else {
        log::warn!("skipping training plots: the manifest lists no members");
        return Ok(());
    };

    match read_trajectory(&run_dir.join(&member.trajectory)) {
        Ok(points) => {
            let lambda: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.iteration as f64, p.lambda))
                .collect();
            // Randomized policies draw an independent λ every iteration, so
            // connecting them would be visual noise; deterministic policies
            // read as a schedule.
            let series = if matches!(manifest.policy.as_str(), "random" | "tarw") {
                PlotSeries::dots("λ", lambda)
            } else {
                PlotSeries::line("λ", lambda)
            };
            let spec = ChartSpec {
                title: format!("λ schedule — {} policy", manifest.policy),
                x_label: "iteration".into(),
                y_label: "λ".into(),
                series: vec![series],
            };
            write_svg(out_dir.join("lambda_trajectory.svg"), &spec, written)?;

            let cosine: Vec<(f64, f64)> = points
                .iter()
                .filter_map(|p| p.cosine.map(|c| (p.iteration as f64, c)))
                .collect();
            if cosine.is_empty() {
                log::warn!("skipping cosine plot: no iteration recorded a similarity");
            } else {
                let spec = ChartSpec {
                    title: "Gradient cosine similarity".into(),
                    x_label: "iteration".into(),
                    y_label: "cos(g_error, g_instability)".into(),
                    series: vec![PlotSeries::line("cosine", cosine)],
                };
                write_svg(out_dir.join("cosine_similarity.svg"), &spec, written)?;
            }
        }
        Err(e) => log::warn!("skipping λ and cosine plots: {e}"),
    }

    match read_runlog(&run_dir.join(&member.runlog)) {
        Ok(rows) => {
            let error: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
            let instability: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.2)).collect();
            let spec = ChartSpec {
                title: "Training losses".into(),
                x_label: "iteration".into(),
                y_label: "loss".into(),
                series: vec![
                    PlotSeries::line("accuracy (scaled error)", error),
                    PlotSeries::line("instability (scaled revision)", instability),
                ],
            };
            write_svg(out_dir.join("training_losses.svg"), &spec, written)?;
        }
        Err(e) => log::warn!("skipping loss plot: {e}"),
    }
    Ok(())
}

/// Validation-sMAPE sweep over a single varied grid parameter.
fn render_sweep_plot(run_dir: &Path, out_dir: &Path, written: &mut Vec<PathBuf>) -> CliResult<()> {
    let path = run_dir.join(REPORT_FILE);
    if !path.exists() {
        return Ok(());
    }
    let mut reader = match csv::Reader::from_path(&path) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("skipping sweep plot: {e}");
            return Ok(());
        }
    };
    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(e) => {
            log::warn!("skipping sweep plot: {e}");
            return Ok(());
        }
    };
    if headers.len() < 4 || headers.first().map(String::as_str) != Some("cell") {
        log::warn!("skipping sweep plot: {REPORT_FILE} has an unexpected header");
        return Ok(());
    }
    let parameters = &headers[1..headers.len() - 2];
    if parameters.len() != 1 {
        log::warn!(
            "skipping sweep plot: it needs a single varied parameter, {REPORT_FILE} has {}",
            parameters.len()
        );
        return Ok(());
    }
    let parameter = &parameters[0];

    let mut points: Vec<(f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping sweep plot: {e}");
                return Ok(());
            }
        };
        if record.get(3).map(str::trim) != Some("ok") {
            continue;
        }
        let (Some(x), Some(y)) = (record.get(1), record.get(2)) else {
            continue;
        };
        match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) => points.push((x, y)),
            _ => {
                log::warn!("skipping sweep plot: parameter {parameter:?} is not numeric");
                return Ok(());
            }
        }
    }
    if points.is_empty() {
        log::warn!("skipping sweep plot: no successful cells in {REPORT_FILE}");
        return Ok(());
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("parameters are finite"));

    let spec = ChartSpec {
        title: format!("Validation sMAPE vs {parameter}"),
        x_label: parameter.clone(),
        y_label: "validation sMAPE".into(),
        series: vec![PlotSeries::line("validation sMAPE", points)],
    };
    let name = format!("sweep_{}.svg", parameter.replace('.', "_"));
    write_svg(out_dir.join(name), &spec, written)
}

/// Method-level summary table and rank-interval plots from a score table.
fn render_score_artifacts(
    run_dir: &Path,
    out_dir: &Path,
    written: &mut Vec<PathBuf>,
) -> CliResult<()> {
    let path = run_dir.join("scores.csv");
    if !path.exists() {
        return Ok(());
    }
    let table = match std::fs::File::open(&path)
        .map_err(nbeats_s::Error::from)
        .and_then(ScoreTable::read_csv)
    {
        Ok(t) => t,
        Err(e) => {
            log::warn!("skipping score artifacts: {e}");
            return Ok(());
        }
    };

    let summary_path = out_dir.join("summary.csv");
    let file = std::fs::File::create(&summary_path).map_err(CliError::runtime)?;
    table
        .write_summary_csv(BufWriter::new(file))
        .map_err(CliError::runtime)?;
    written.push(summary_path);

    if table.methods().len() < 2 {
        log::warn!("skipping rank plots: they need at least two methods");
        return Ok(());
    }
    for metric in [Metric::Smape, Metric::Smapc] {
        let result = ScoreMatrix::from_table(&table, metric)
            .and_then(|matrix| mcb(&matrix, SignificanceLevel::Alpha05));
        match result {
            Ok(result) => {
                let svg = mcb_svg(&result, metric.name()).map_err(CliError::runtime)?;
                let path = out_dir.join(format!("mcb_{}.svg", metric.name()));
                std::fs::write(&path, svg).map_err(CliError::runtime)?;
                written.push(path);
            }
            Err(e) => log::warn!("skipping {} rank plot: {e}", metric.name()),
        }
    }
    Ok(())
}

fn write_svg(path: PathBuf, spec: &ChartSpec, written: &mut Vec<PathBuf>) -> CliResult<()> {
    let svg = chart_svg(spec).map_err(CliError::runtime)?;
    std::fs::write(&path, svg).map_err(CliError::runtime)?;
    written.push(path);
    Ok(())
}

/// Parse a `trajectory.csv` written during training.
fn read_trajectory(path: &Path) -> CliResult<Vec<TrajectoryPoint>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "iteration,lambda,cosine_similarity,l_error,l_instability" {
        return Err(CliError::Config(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Config(format!(
                "{} line {}: expected 5 fields",
                path.display(),
                i + 2
            )));
        }
        let parse = |s: &str| -> CliResult<f64> {
            s.parse().map_err(|_| {
                CliError::Config(format!("{} line {}: bad value {s:?}", path.display(), i + 2))
            })
        };
        points.push(TrajectoryPoint {
            iteration: fields[0].parse().map_err(|_| {
                CliError::Config(format!(
                    "{} line {}: bad iteration {:?}",
                    path.display(),
                    i + 2,
                    fields[0]
                ))
            })?,
            lambda: parse(fields[1])?,
            cosine: if fields[2].is_empty() {
                None
            } else {
                Some(parse(fields[2])?)
            },
            l_error: parse(fields[3])?,
            l_instability: parse(fields[4])?,
        });
    }
    Ok(points)
}

/// Parse `(iteration, l_error, l_instability)` out of a `runlog.csv`.
fn read_runlog(path: &Path) -> CliResult<Vec<(f64, f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("iteration,lambda,cosine_similarity,l_error,l_instability") {
        return Err(CliError::Config(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(CliError::Config(format!(
                "{} line {}: expected at least 5 fields",
                path.display(),
                i + 2
            )));
        }
        let parse = |s: &str| -> CliResult<f64> {
            s.parse().map_err(|_| {
                CliError::Config(format!("{} line {}: bad value {s:?}", path.display(), i + 2))
            })
        };
        rows.push((parse(fields[0])?, parse(fields[3])?, parse(fields[4])?));
    }
    Ok(rows)
}
