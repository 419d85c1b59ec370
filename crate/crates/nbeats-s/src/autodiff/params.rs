//! Ordered, named parameter storage.
//!
//! The optimizer works on one flat `f64` vector, so the set guarantees a
//! stable name order and an exact flatten / scatter round trip. Names are
//! insertion-ordered, which keeps flat layouts reproducible across runs as
//! long as construction order is deterministic.

use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor,
}

/// Insertion-ordered collection of named tensors.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct ParameterSet {
    entries: Vec<NamedTensor>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a tensor under a unique name.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::Contract(format!("duplicate parameter name {name:?}")));
        }
        self.entries.push(NamedTensor { name, tensor });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.tensor)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NamedTensor> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    /// Concatenate all tensors, in insertion order, into one vector.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scalar_count());
        for e in &self.entries {
            out.extend_from_slice(e.tensor.values());
        }
        out
    }

    /// Scatter a flat vector produced by [`flatten`](Self::flatten) back into
    /// the tensors. The length must match exactly.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.scalar_count() {
            return Err(Error::Dimension(format!(
                "flat vector length {} does not match parameter count {}",
                flat.len(),
                self.scalar_count()
            )));
        }
        let mut offset = 0;
        for e in &mut self.entries {
            let n = e.tensor.len();
            e.tensor
                .values_mut()
                .copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Byte offset of each named tensor inside the flat layout, for wiring
    /// tape leaves to optimizer slots.
    pub fn flat_ranges(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut out = Vec::with_capacity(self.entries.len());
        let mut offset = 0;
        for e in &self.entries {
            let n = e.tensor.len();
            out.push((e.name.clone(), offset..offset + n));
            offset += n;
        }
        out
    }
}
