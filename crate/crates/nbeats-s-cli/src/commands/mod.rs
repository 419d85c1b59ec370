//! One module per subcommand. Commands print a short summary to stdout,
//! log details to stderr, and never write partial run directories: inputs
//! are validated and loaded before the first artifact is created.

use nbeats_s::eval::EvalWindow;

pub mod forecast;
pub mod grid;
pub mod ingest;
pub mod mcb;
pub mod report;
pub mod score;
pub mod synthesize;
pub mod train;

/// File-name fragment for a window.
pub fn window_name(window: EvalWindow) -> &'static str {
    match window {
        EvalWindow::Validation => "validation",
        EvalWindow::Test => "test",
    }
}
