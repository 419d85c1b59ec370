//! A research engine for training N-BEATS networks on univariate monthly
//! series under a composite accuracy/stability objective, with pluggable
//! dynamic loss-weighting policies and a rolling-origin evaluation harness.
//!
//! The crate is self-contained: a small reverse-mode autodiff tape drives
//! the network, Adam is implemented in place, and all evaluation (sMAPE for
//! accuracy, sMAPC for forecast stability, rank tests across methods) works
//! from plain in-memory panels. Everything is seeded and deterministic —
//! the same configuration always produces bit-identical parameters, logs,
//! and scores.
//!
//! Module map:
//! - [`autodiff`]: tensors, the gradient tape, parameter sets, Adam;
//! - [`model`]: the block-stacked network, init, forward passes, checkpoints;
//! - [`losses`]: scaled training losses and percentage evaluation metrics;
//! - [`dlw`]: the λᵢ weighting policies and their shared state machine;
//! - [`data`]: ingestion, splits, synthetic corpora, the dual-origin sampler;
//! - [`trainer`]: the training loop, ensembling, run logs;
//! - [`eval`]: rolling-origin panels, score tables, the rank test;
//! - [`plot`]: deterministic SVG charts for diagnostics and reports.

pub mod autodiff;
pub mod data;
pub mod dlw;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod plot;
pub mod trainer;

pub use error::{Error, Result};
