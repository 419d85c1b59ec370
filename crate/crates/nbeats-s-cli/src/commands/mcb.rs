//! `mcb`: rank methods from a score table and draw simultaneous confidence
//! intervals; methods whose intervals are disjoint differ significantly.

use crate::{CliError, CliResult};
use nbeats_s::eval::{mcb, Metric, ScoreMatrix, ScoreTable, SignificanceLevel};
use nbeats_s::plot::mcb_svg;
use std::io::{BufReader, BufWriter};
use std::path::Path;

pub fn run(
    scores: &Path,
    alpha: SignificanceLevel,
    metrics: &[Metric],
    out_dir: &Path,
) -> CliResult<()> {
    let file = std::fs::File::open(scores)
        .map_err(|e| CliError::Config(format!("scores {}: {e}", scores.display())))?;
    let table = ScoreTable::read_csv(BufReader::new(file)).map_err(CliError::config)?;
    std::fs::create_dir_all(out_dir).map_err(CliError::runtime)?;

    for &metric in metrics {
        let matrix = ScoreMatrix::from_table(&table, metric).map_err(CliError::config)?;
        let result = mcb(&matrix, alpha).map_err(CliError::config)?;

        let csv_path = out_dir.join(format!("mcb_{}.csv", metric.name()));
        let file = std::fs::File::create(&csv_path).map_err(CliError::runtime)?;
        result
            .write_csv(BufWriter::new(file))
            .map_err(CliError::runtime)?;
        let svg_path = out_dir.join(format!("mcb_{}.svg", metric.name()));
        let svg = mcb_svg(&result, metric.name()).map_err(CliError::runtime)?;
        std::fs::write(&svg_path, svg).map_err(CliError::runtime)?;

        let best = &result.methods[result.best_index()];
        let distinguished = result
            .methods
            .iter()
            .enumerate()
            .filter(|&(i, _)| result.significant[result.best_index()][i])
            .count();
        println!(
            "{}: best method {} (average rank {:.3} ± {:.3}); \
             {distinguished} of {} methods differ significantly from it",
            metric.name(),
            best.method,
            best.average_rank,
            result.half_width,
            result.methods.len() - 1
        );
        println!("wrote {} and {}", csv_path.display(), svg_path.display());
    }
    Ok(())
}
