//! The command-line surface: flags, subcommands, and dispatch.

use crate::commands;
use crate::CliResult;
use clap::{Parser, Subcommand, ValueEnum};
use nbeats_s::data::{DataFormat, SynthSpec};
use nbeats_s::eval::{EvalWindow, Metric, SignificanceLevel};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "nbeats-s",
    version,
    about = "Train and evaluate stability-regularized N-BEATS forecasting ensembles"
)]
pub struct Cli {
    /// Worker threads for ensemble members and grid cells
    /// (1 = sequential and bit-reproducible, 0 = one per core).
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a dataset file to the canonical long CSV layout.
    Ingest {
        /// Input data file.
        #[arg(long)]
        dataset: PathBuf,
        /// Input layout.
        #[arg(long, value_enum, default_value_t = FormatArg::Long)]
        format: FormatArg,
        /// Where to write the converted CSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Generate a synthetic monthly dataset (level + trend + seasonality + AR noise).
    Synthesize {
        #[arg(long)]
        num_series: usize,
        /// Observations per series.
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Where to write the long CSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Train an ensemble from an experiment config and write a run directory.
    Train {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Run directory (overrides output_dir in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated member seeds (overrides the config's seeds).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },

    /// Sweep hyperparameters; each cell trains once and is scored by
    /// validation sMAPE.
    Grid {
        /// Base experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Grid spec (JSON): parameter paths and candidate values.
        #[arg(long)]
        grid: PathBuf,
        /// Where to write the grid report and winning config.
        #[arg(long)]
        out: PathBuf,
    },

    /// Roll the trained ensemble over a held-out window and export the
    /// forecast panel.
    Forecast {
        /// Run directory produced by `train`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = WindowArg::Test)]
        window: WindowArg,
        /// Panel CSV path (default: <run>/panel_<window>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Score rolling forecasts for accuracy (sMAPE) and stability (sMAPC).
    Score {
        /// Run directory produced by `train`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = WindowArg::Test)]
        window: WindowArg,
        /// Also score the seasonal-naive baseline.
        #[arg(long)]
        baseline: bool,
        /// Forecast-panel CSVs from other tools to score alongside
        /// (repeatable).
        #[arg(long = "import")]
        imports: Vec<PathBuf>,
        /// Output directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Rank methods from a score table with simultaneous confidence
    /// intervals.
    Mcb {
        /// Score table CSV written by `score`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum, default_value_t = AlphaArg::A05)]
        alpha: AlphaArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Both)]
        metric: MetricArg,
        /// Output directory for the interval tables and plots.
        #[arg(long)]
        out: PathBuf,
    },

    /// Render diagnostic SVGs (λ schedule, cosine similarity, losses,
    /// sweeps, rank intervals) from a run directory.
    Report {
        /// Run directory produced by `train`.
        #[arg(long)]
        run: PathBuf,
        /// Output directory (default: <run>/report).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// On-disk dataset layouts accepted by `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// One series per row: id, then values across the columns.
    M4,
    /// One observation per row: series_id, t_index, value.
    Long,
}

impl From<FormatArg> for DataFormat {
    fn from(arg: FormatArg) -> DataFormat {
        match arg {
            FormatArg::M4 => DataFormat::Horizontal,
            FormatArg::Long => DataFormat::Long,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Validation,
    Test,
}

impl From<WindowArg> for EvalWindow {
    fn from(arg: WindowArg) -> EvalWindow {
        match arg {
            WindowArg::Validation => EvalWindow::Validation,
            WindowArg::Test => EvalWindow::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaArg {
    #[value(name = "0.05")]
    A05,
    #[value(name = "0.10")]
    A10,
}

impl From<AlphaArg> for SignificanceLevel {
    fn from(arg: AlphaArg) -> SignificanceLevel {
        match arg {
            AlphaArg::A05 => SignificanceLevel::Alpha05,
            AlphaArg::A10 => SignificanceLevel::Alpha10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Smape,
    Smapc,
    Both,
}

impl MetricArg {
    pub fn metrics(self) -> Vec<Metric> {
        match self {
            MetricArg::Smape => vec![Metric::Smape],
            MetricArg::Smapc => vec![Metric::Smapc],
            MetricArg::Both => vec![Metric::Smape, Metric::Smapc],
        }
    }
}

/// Dispatch a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest {
            dataset,
            format,
            out,
        } => commands::ingest::run(&dataset, format.into(), &out),
        Command::Synthesize {
            num_series,
            length,
            seed,
            out,
        } => commands::synthesize::run(
            &SynthSpec {
                num_series,
                length,
                seed,
                noise_scale: 1.0,
            },
            &out,
        ),
        Command::Train { config, out, seeds } => commands::train::run(&config, out, seeds),
        Command::Grid { config, grid, out } => commands::grid::run(&config, &grid, &out),
        Command::Forecast { run, window, out } => {
            commands::forecast::run(&run, window.into(), out)
        }
        Command::Score {
            run,
            window,
            baseline,
            imports,
            out,
        } => commands::score::run(&run, window.into(), baseline, &imports, out),
        Command::Mcb {
            scores,
            alpha,
            metric,
            out,
        } => commands::mcb::run(&scores, alpha.into(), &metric.metrics(), &out),
        Command::Report { run, out } => commands::report::run(&run, out),
    }
}
