//! Dense row-major float64 tensors and the raw arithmetic kernels shared by
//! the tape and the plain inference path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense tensor: shape plus row-major `f64` storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Tensor> {
        Tensor::new(raw.shape, raw.values)
    }
}

impl Tensor {
    /// Build a tensor, checking that the shape matches the storage and that
    /// every value is finite.
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Dimension(format!(
                "shape {:?} implies {} values, got {}",
                shape,
                expected,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite value {} at flat index {}",
                values[bad], bad
            )));
        }
        Ok(Tensor { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Tensor::new(vec![1], vec![v])
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![values.len()], values)
    }

    /// Build a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Dimension(format!(
                    "ragged rows: expected {}, got {}",
                    c,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Tensor::new(vec![r, c], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// In-place value access for the optimizer's scatter path. Callers keep
    /// the finiteness invariant (the training loop aborts on non-finite
    /// losses before parameters can absorb them).
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (rows, cols) view: matrices as-is, vectors as a single row, scalars as 1x1.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.len() {
            0 => Ok((1, 1)),
            1 => Ok((1, self.shape[0])),
            2 => Ok((self.shape[0], self.shape[1])),
            _ => Err(Error::Dimension(format!(
                "expected at most 2 dimensions, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn row(&self, r: usize) -> Result<&[f64]> {
        let (rows, cols) = self.dims2()?;
        if r >= rows {
            return Err(Error::Dimension(format!("row {r} out of {rows}")));
        }
        Ok(&self.values[r * cols..(r + 1) * cols])
    }
}

// ── Raw kernels ──────────────────────────────────────────────────────
//
// Both the tape forward/backward and the plain inference path call these,
// so the two paths produce bit-identical values.

/// C[m,n] = A[m,k] · B[k,n], accumulated into `out` (must be zeroed by the caller).
pub fn matmul_acc(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &b_pj) in out_row.iter_mut().zip(b_row.iter()) {
                *o += a_ip * b_pj;
            }
        }
    }
}

pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    matmul_acc(a, b, m, k, n, &mut out);
    out
}

/// dA[m,k] += dC[m,n] · Bᵀ, i.e. dA[i,p] += Σ_j dC[i,j]·B[p,j].
pub fn matmul_grad_lhs(dout: &[f64], b: &[f64], m: usize, k: usize, n: usize, da: &mut [f64]) {
    for i in 0..m {
        let d_row = &dout[i * n..(i + 1) * n];
        for p in 0..k {
            let b_row = &b[p * n..(p + 1) * n];
            let mut s = 0.0;
            for (d, bv) in d_row.iter().zip(b_row.iter()) {
                s += d * bv;
            }
            da[i * k + p] += s;
        }
    }
}

/// dB[k,n] += Aᵀ · dC[m,n], i.e. dB[p,j] += Σ_i A[i,p]·dC[i,j].
pub fn matmul_grad_rhs(dout: &[f64], a: &[f64], m: usize, k: usize, n: usize, db: &mut [f64]) {
    for i in 0..m {
        let d_row = &dout[i * n..(i + 1) * n];
        for p in 0..k {
            let a_ip = a[i * k + p];
            let db_row = &mut db[p * n..(p + 1) * n];
            for (dbv, d) in db_row.iter_mut().zip(d_row.iter()) {
                *dbv += a_ip * d;
            }
        }
    }
}

/// out[i,j] = x[i,j] + bias[j].
pub fn add_row_vec(x: &[f64], bias: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(x[r * cols + c] + bias[c]);
        }
    }
    out
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}
