//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes do not conform for the requested operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An operation's contract was violated (non-scalar loss node,
    /// mismatched gradient keys, missing score cells, ...).
    #[error("contract error: {0}")]
    Contract(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A data file could not be ingested.
    #[error("ingest error: {0}")]
    Ingest(String),

    /// The in-sample scale window is constant, so the scaled losses have a
    /// zero denominator.
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    /// Training was aborted because a loss became non-finite.
    #[error(
        "training aborted at iteration {iteration}: non-finite loss \
         (lambda={lambda}, l_error={l_error}, l_instability={l_instability}, \
         grad_norms=({g_error_norm}, {g_instability_norm}))"
    )]
    TrainingAborted {
        iteration: usize,
        lambda: f64,
        l_error: f64,
        l_instability: f64,
        g_error_norm: f64,
        g_instability_norm: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
