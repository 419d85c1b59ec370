//! `ingest`: convert a dataset file to the canonical long CSV layout.

use crate::{CliError, CliResult};
use nbeats_s::data::{ingest_path, write_long_path, DataFormat};
use std::path::Path;

pub fn run(dataset: &Path, format: DataFormat, out: &Path) -> CliResult<()> {
    let series = ingest_path(dataset, format).map_err(CliError::config)?;
    write_long_path(&series, out).map_err(CliError::runtime)?;
    let observations: usize = series.iter().map(|s| s.len()).sum();
    println!(
        "wrote {} series ({observations} observations) to {}",
        series.len(),
        out.display()
    );
    Ok(())
}
