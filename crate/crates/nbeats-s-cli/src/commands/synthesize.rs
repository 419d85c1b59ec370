//! `synthesize`: generate a synthetic monthly dataset as long CSV.

use crate::{CliError, CliResult};
use nbeats_s::data::{synthesize, write_long_path, SynthSpec};
use std::path::Path;

pub fn run(spec: &SynthSpec, out: &Path) -> CliResult<()> {
    let series = synthesize(spec).map_err(CliError::config)?;
    write_long_path(&series, out).map_err(CliError::runtime)?;
    println!(
        "wrote {} synthetic series of length {} (seed {}) to {}",
        series.len(),
        spec.length,
        spec.seed,
        out.display()
    );
    Ok(())
}
