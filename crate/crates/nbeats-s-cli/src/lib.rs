//! Command-line front end for the `nbeats-s` library.
//!
//! The binary wires experiment configs to the training, evaluation, and
//! reporting pipeline:
//!
//! - [`config`] — experiment and grid-search config files (JSON, strict).
//! - [`panel`] — the portable forecast-panel CSV exchanged with other tools.
//! - [`manifest`] — the run manifest written after all other artifacts.
//! - [`commands`] — one module per subcommand.
//!
//! Every failure is classified as either a [`CliError::Config`] (bad input:
//! exit code 2) or a [`CliError::Runtime`] (failure while doing the work:
//! exit code 3).

use std::fmt;

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod panel;

/// A failure with its exit-code classification attached.
#[derive(Debug)]
pub enum CliError {
    /// Invalid config file, flags, or input data. Exit code 2.
    Config(String),
    /// Training, evaluation, or output writing failed. Exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn config(err: impl fmt::Display) -> Self {
        CliError::Config(err.to_string())
    }

    pub fn runtime(err: impl fmt::Display) -> Self {
        CliError::Runtime(err.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
