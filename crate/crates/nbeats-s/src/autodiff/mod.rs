//! Minimal reverse-mode automatic differentiation over dense `f64` matrices,
//! plus the parameter plumbing (named storage, flat layout, Adam) the
//! trainer builds on.
//!
//! The op set is deliberately small: exactly what a fully connected residual
//! forecaster and its scaled losses need. Everything is two-dimensional;
//! vectors are 1xN rows and scalars are 1x1.

pub mod adam;
pub mod params;
pub mod tape;
pub mod tensor;

pub use adam::AdamState;
pub use params::{NamedTensor, ParameterSet};
pub use tape::{Gradients, Tape, VarId};
pub use tensor::Tensor;
