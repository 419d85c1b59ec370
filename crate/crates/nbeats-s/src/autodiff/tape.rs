//! Wengert tape: records primitive operations during the forward pass and
//! replays them in reverse to accumulate exact gradients.
//!
//! The tape is append-only, so node indices are topologically ordered by
//! construction and one backward sweep visits each node exactly once.
//! `backward` allocates its own adjoint buffers, which is what lets a single
//! forward tape support several independent backward passes (one per loss
//! term).

use crate::autodiff::tensor::{
    add_row_vec, matmul, matmul_grad_lhs, matmul_grad_rhs, relu, Tensor,
};
use crate::error::{Error, Result};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// lhs[r,k] · rhs[k,c]
    MatMul(VarId, VarId),
    /// input[r,c] + bias[1,c] broadcast over rows
    AddRowVec(VarId, VarId),
    Relu(VarId),
    Add(VarId, VarId),
    Sub(VarId, VarId),
    Square(VarId),
    Sqrt(VarId),
    /// columns [start, start+len) of the input
    SliceCols(VarId, usize, usize),
    /// rows [start, start+len) of the input
    SliceRows(VarId, usize, usize),
    /// [r,c] -> [r,1], each row averaged
    RowMean(VarId),
    /// [r,c] -> [1,1], grand mean
    MeanAll(VarId),
    /// elementwise multiply by a constant (not differentiated through)
    MulConst(VarId, Vec<f64>),
    /// a·x + b elementwise; only the multiplier survives differentiation,
    /// so the op records just that
    AffineScalar(VarId, f64),
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    op: Op,
}

/// Per-node adjoints produced by one backward pass.
pub struct Gradients {
    adjoints: Vec<Vec<f64>>,
}

impl Gradients {
    /// Gradient of the differentiated scalar w.r.t. the values of `id`.
    pub fn get(&self, id: VarId) -> &[f64] {
        &self.adjoints[id.0]
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, values: Vec<f64>, op: Op) -> VarId {
        debug_assert_eq!(values.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            values,
            op,
        });
        VarId(self.nodes.len() - 1)
    }

    fn dims(&self, id: VarId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, id: VarId) -> &[f64] {
        &self.nodes[id.0].values
    }

    /// Value of a 1x1 node.
    pub fn scalar_value(&self, id: VarId) -> Result<f64> {
        let n = &self.nodes[id.0];
        if n.values.len() != 1 {
            return Err(Error::Contract(format!(
                "expected scalar node, got {}x{}",
                n.rows, n.cols
            )));
        }
        Ok(n.values[0])
    }

    /// Insert a constant or parameter leaf with explicit 2-D dims.
    pub fn leaf(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> Result<VarId> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "leaf storage {} does not match {}x{}",
                values.len(),
                rows,
                cols
            )));
        }
        Ok(self.push(rows, cols, values, Op::Leaf))
    }

    pub fn leaf_tensor(&mut self, t: &Tensor) -> Result<VarId> {
        let (r, c) = t.dims2()?;
        self.leaf(r, c, t.values().to_vec())
    }

    pub fn matmul(&mut self, lhs: VarId, rhs: VarId) -> Result<VarId> {
        let (m, k) = self.dims(lhs);
        let (k2, n) = self.dims(rhs);
        if k != k2 {
            return Err(Error::Dimension(format!(
                "matmul {m}x{k} · {k2}x{n}"
            )));
        }
        let out = matmul(self.value(lhs), self.value(rhs), m, k, n);
        Ok(self.push(m, n, out, Op::MatMul(lhs, rhs)))
    }

    pub fn add_row_vec(&mut self, input: VarId, bias: VarId) -> Result<VarId> {
        let (r, c) = self.dims(input);
        let (br, bc) = self.dims(bias);
        if br != 1 || bc != c {
            return Err(Error::Dimension(format!(
                "row-vector add: input {r}x{c}, bias {br}x{bc}"
            )));
        }
        let out = add_row_vec(self.value(input), self.value(bias), r, c);
        Ok(self.push(r, c, out, Op::AddRowVec(input, bias)))
    }

    /// Fully connected layer: input·weight + bias, broadcast over the batch.
    pub fn affine(&mut self, input: VarId, weight: VarId, bias: VarId) -> Result<VarId> {
        let prod = self.matmul(input, weight)?;
        self.add_row_vec(prod, bias)
    }

    pub fn relu(&mut self, input: VarId) -> VarId {
        let (r, c) = self.dims(input);
        let out = relu(self.value(input));
        self.push(r, c, out, Op::Relu(input))
    }

    fn binary_same_shape(&mut self, lhs: VarId, rhs: VarId, sub: bool) -> Result<VarId> {
        let (r, c) = self.dims(lhs);
        if self.dims(rhs) != (r, c) {
            let (r2, c2) = self.dims(rhs);
            return Err(Error::Dimension(format!(
                "elementwise op on {r}x{c} and {r2}x{c2}"
            )));
        }
        let out: Vec<f64> = self
            .value(lhs)
            .iter()
            .zip(self.value(rhs))
            .map(|(a, b)| if sub { a - b } else { a + b })
            .collect();
        let op = if sub { Op::Sub(lhs, rhs) } else { Op::Add(lhs, rhs) };
        Ok(self.push(r, c, out, op))
    }

    pub fn add(&mut self, lhs: VarId, rhs: VarId) -> Result<VarId> {
        self.binary_same_shape(lhs, rhs, false)
    }

    pub fn sub(&mut self, lhs: VarId, rhs: VarId) -> Result<VarId> {
        self.binary_same_shape(lhs, rhs, true)
    }

    pub fn square(&mut self, input: VarId) -> VarId {
        let (r, c) = self.dims(input);
        let out = self.value(input).iter().map(|v| v * v).collect();
        self.push(r, c, out, Op::Square(input))
    }

    /// Elementwise square root. Inputs must be non-negative; the gradient at
    /// exactly zero is taken to be zero.
    pub fn sqrt(&mut self, input: VarId) -> Result<VarId> {
        let (r, c) = self.dims(input);
        if self.value(input).iter().any(|&v| v < 0.0) {
            return Err(Error::Contract("sqrt of negative value".into()));
        }
        let out = self.value(input).iter().map(|v| v.sqrt()).collect();
        Ok(self.push(r, c, out, Op::Sqrt(input)))
    }

    pub fn slice_cols(&mut self, input: VarId, start: usize, len: usize) -> Result<VarId> {
        let (r, c) = self.dims(input);
        if start + len > c {
            return Err(Error::Dimension(format!(
                "column slice [{start}, {}) of {r}x{c}",
                start + len
            )));
        }
        let src = self.value(input);
        let mut out = Vec::with_capacity(r * len);
        for row in 0..r {
            out.extend_from_slice(&src[row * c + start..row * c + start + len]);
        }
        Ok(self.push(r, len, out, Op::SliceCols(input, start, len)))
    }

    pub fn slice_rows(&mut self, input: VarId, start: usize, len: usize) -> Result<VarId> {
        let (r, c) = self.dims(input);
        if start + len > r {
            return Err(Error::Dimension(format!(
                "row slice [{start}, {}) of {r}x{c}",
                start + len
            )));
        }
        let out = self.value(input)[start * c..(start + len) * c].to_vec();
        Ok(self.push(len, c, out, Op::SliceRows(input, start, len)))
    }

    pub fn row_mean(&mut self, input: VarId) -> VarId {
        let (r, c) = self.dims(input);
        let src = self.value(input);
        let out = (0..r)
            .map(|row| src[row * c..(row + 1) * c].iter().sum::<f64>() / c as f64)
            .collect();
        self.push(r, 1, out, Op::RowMean(input))
    }

    pub fn mean_all(&mut self, input: VarId) -> VarId {
        let n = self.value(input).len();
        let mean = self.value(input).iter().sum::<f64>() / n as f64;
        self.push(1, 1, vec![mean], Op::MeanAll(input))
    }

    /// Elementwise multiply by a constant vector of the same length. The
    /// constant is data, not a differentiated operand.
    pub fn mul_const(&mut self, input: VarId, factor: &[f64]) -> Result<VarId> {
        let (r, c) = self.dims(input);
        if factor.len() != r * c {
            return Err(Error::Dimension(format!(
                "constant factor length {} for {r}x{c}",
                factor.len()
            )));
        }
        let out = self
            .value(input)
            .iter()
            .zip(factor)
            .map(|(v, f)| v * f)
            .collect();
        Ok(self.push(r, c, out, Op::MulConst(input, factor.to_vec())))
    }

    pub fn affine_scalar(&mut self, input: VarId, a: f64, b: f64) -> VarId {
        let (r, c) = self.dims(input);
        let out = self.value(input).iter().map(|v| a * v + b).collect();
        self.push(r, c, out, Op::AffineScalar(input, a))
    }

    /// Reverse sweep from a scalar node. Returns adjoints for every node;
    /// repeated calls on the same tape are independent.
    pub fn backward(&self, loss: VarId) -> Result<Gradients> {
        let ln = &self.nodes[loss.0];
        if ln.values.len() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss node, got {}x{}",
                ln.rows, ln.cols
            )));
        }
        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.values.len()])
            .collect();
        adj[loss.0][0] = 1.0;

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if adj[idx].iter().all(|&g| g == 0.0) {
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(lhs, rhs) => {
                    let (m, k) = self.dims(*lhs);
                    let n = node.cols;
                    let dout = std::mem::take(&mut adj[idx]);
                    matmul_grad_lhs(&dout, self.value(*rhs), m, k, n, &mut adj[lhs.0]);
                    matmul_grad_rhs(&dout, self.value(*lhs), m, k, n, &mut adj[rhs.0]);
                    adj[idx] = dout;
                }
                Op::AddRowVec(input, bias) => {
                    let (r, c) = (node.rows, node.cols);
                    let dout = std::mem::take(&mut adj[idx]);
                    for (gi, go) in adj[input.0].iter_mut().zip(dout.iter()) {
                        *gi += go;
                    }
                    for row in 0..r {
                        for col in 0..c {
                            adj[bias.0][col] += dout[row * c + col];
                        }
                    }
                    adj[idx] = dout;
                }
                Op::Relu(input) => {
                    let dout = std::mem::take(&mut adj[idx]);
                    let src = self.value(*input);
                    for ((gi, go), &x) in adj[input.0].iter_mut().zip(dout.iter()).zip(src) {
                        if x > 0.0 {
                            *gi += go;
                        }
                    }
                    adj[idx] = dout;
                }
                Op::Add(lhs, rhs) => {
                    let dout = std::mem::take(&mut adj[idx]);
                    for (gi, go) in adj[lhs.0].iter_mut().zip(dout.iter()) {
                        *gi += go;
                    }
                    for (gi, go) in adj[rhs.0].iter_mut().zip(dout.iter()) {
                        *gi += go;
                    }
                    adj[idx] = dout;
                }
                Op::Sub(lhs, rhs) => {
                    let dout = std::mem::take(&mut adj[idx]);
                    for (gi, go) in adj[lhs.0].iter_mut().zip(dout.iter()) {
                        *gi += go;
                    }
                    for (gi, go) in adj[rhs.0].iter_mut().zip(dout.iter()) {
                        *gi -= go;
                    }
                    adj[idx] = dout;
                }
                Op::Square(input) => {
                    let dout = std::mem::take(&mut adj[idx]);
                    let src = self.value(*input);
                    for ((gi, go), &x) in adj[input.0].iter_mut().zip(dout.iter()).zip(src) {
                        *gi += 2.0 * x * go;
                    }
                    adj[idx] = dout;
                }
                Op::Sqrt(input) => {
                    // d√x = 1/(2√x); subgradient 0 where the output is 0.
                    let dout = std::mem::take(&mut adj[idx]);
                    for ((gi, go), &y) in adj[input.0]
                        .iter_mut()
                        .zip(dout.iter())
                        .zip(node.values.iter())
                    {
                        if y > 0.0 {
                            *gi += go / (2.0 * y);
                        }
                    }
                    adj[idx] = dout;
                }
                Op::SliceCols(input, start, len) => {
                    let c = self.nodes[input.0].cols;
                    let dout = std::mem::take(&mut adj[idx]);
                    for row in 0..node.rows {
                        for col in 0..*len {
                            adj[input.0][row * c + start + col] += dout[row * len + col];
                        }
                    }
                    adj[idx] = dout;
                }
                Op::SliceRows(input, start, _len) => {
                    let c = node.cols;
                    let dout = std::mem::take(&mut adj[idx]);
                    for (gi, go) in adj[input.0][start * c..].iter_mut().zip(dout.iter()) {
                        *gi += go;
                    }
                    adj[idx] = dout;
                }
                Op::RowMean(input) => {
                    let c = self.nodes[input.0].cols;
                    let dout = std::mem::take(&mut adj[idx]);
                    for row in 0..node.rows {
                        let g = dout[row] / c as f64;
                        for col in 0..c {
                            adj[input.0][row * c + col] += g;
                        }
                    }
                    adj[idx] = dout;
                }
                Op::MeanAll(input) => {
                    let n = self.nodes[input.0].values.len();
                    let g = adj[idx][0] / n as f64;
                    for gi in adj[input.0].iter_mut() {
                        *gi += g;
                    }
                }
                Op::MulConst(input, factor) => {
                    let dout = std::mem::take(&mut adj[idx]);
                    for ((gi, go), f) in adj[input.0].iter_mut().zip(dout.iter()).zip(factor) {
                        *gi += go * f;
                    }
                    adj[idx] = dout;
                }
                Op::AffineScalar(input, a) => {
                    let dout = std::mem::take(&mut adj[idx]);
                    for (gi, go) in adj[input.0].iter_mut().zip(dout.iter()) {
                        *gi += a * go;
                    }
                    adj[idx] = dout;
                }
            }
        }
        Ok(Gradients { adjoints: adj })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sum_node(tape: &mut Tape, id: VarId) -> VarId {
        // mean · n == sum
        let n = tape.value(id).len() as f64;
        let m = tape.mean_all(id);
        tape.affine_scalar(m, n, 0.0)
    }

    #[test]
    fn affine_identity() {
        let mut t = Tape::new();
        let x = t.leaf(1, 2, vec![1.0, 2.0]).unwrap();
        let w = t.leaf(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = t.leaf(1, 2, vec![0.0, 0.0]).unwrap();
        let y = t.affine(x, w, b).unwrap();
        assert_eq!(t.value(y), &[1.0, 2.0]);
    }

    #[test]
    fn affine_hand_product() {
        let mut t = Tape::new();
        let x = t.leaf(1, 2, vec![1.0, 1.0]).unwrap();
        let w = t.leaf(2, 1, vec![2.0, 3.0]).unwrap();
        let b = t.leaf(1, 1, vec![1.0]).unwrap();
        let y = t.affine(x, w, b).unwrap();
        assert_eq!(t.value(y), &[6.0]);
    }

    #[test]
    fn affine_shape_mismatch() {
        let mut t = Tape::new();
        let x = t.leaf(1, 3, vec![1.0; 3]).unwrap();
        let w = t.leaf(2, 1, vec![2.0, 3.0]).unwrap();
        assert!(matches!(t.matmul(x, w), Err(Error::Dimension(_))));
    }

    #[test]
    fn bias_gradient_counts_batch_rows() {
        // d sum(x·W + b) / db = batch size per component
        let mut t = Tape::new();
        let x = t.leaf(3, 2, vec![0.5; 6]).unwrap();
        let w = t.leaf(2, 2, vec![1.0, -1.0, 2.0, 0.25]).unwrap();
        let b = t.leaf(1, 2, vec![0.1, -0.2]).unwrap();
        let y = t.affine(x, w, b).unwrap();
        let loss = sum_node(&mut t, y);
        let g = t.backward(loss).unwrap();
        for &v in g.get(b) {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn relu_values_and_mask() {
        let mut t = Tape::new();
        let x = t.leaf(1, 3, vec![-1.0, 0.0, 2.0]).unwrap();
        let y = t.relu(x);
        assert_eq!(t.value(y), &[0.0, 0.0, 2.0]);
        let loss = sum_node(&mut t, y);
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(x), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn relu_all_positive_is_identity() {
        let mut t = Tape::new();
        let x = t.leaf(1, 4, vec![0.5, 1.0, 2.0, 3.5]).unwrap();
        let y = t.relu(x);
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn backward_of_param_sum_is_ones() {
        let mut t = Tape::new();
        let p = t.leaf(2, 3, vec![0.3; 6]).unwrap();
        let loss = sum_node(&mut t, p);
        let g = t.backward(loss).unwrap();
        assert!(g.get(p).iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut t = Tape::new();
        let p = t.leaf(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(t.backward(p), Err(Error::Contract(_))));
    }

    /// ‖Wx‖² against central finite differences on the plain evaluation.
    #[test]
    fn norm_squared_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let w: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let eval = |w: &[f64]| -> f64 {
                let y = matmul(x.as_slice(), w, 1, 4, 3);
                y.iter().map(|v| v * v).sum()
            };

            let mut t = Tape::new();
            let wv = t.leaf(4, 3, w.clone()).unwrap();
            let xv = t.leaf(1, 4, x.clone()).unwrap();
            let y = t.matmul(xv, wv).unwrap();
            let sq = t.square(y);
            let loss = sum_node(&mut t, sq);
            let g = t.backward(loss).unwrap();

            let h = 1e-6;
            for i in 0..w.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[i] += h;
                wm[i] -= h;
                let fd = (eval(&wp) - eval(&wm)) / (2.0 * h);
                let an = g.get(wv)[i];
                let denom = fd.abs().max(an.abs()).max(1e-8);
                assert!(
                    ((fd - an) / denom).abs() < 1e-5,
                    "param {i}: fd={fd}, analytic={an}"
                );
            }
        }
    }

    #[test]
    fn two_backward_passes_are_independent() {
        let mut t = Tape::new();
        let p = t.leaf(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let sq = t.square(p);
        let l1 = sum_node(&mut t, p);
        let l2 = sum_node(&mut t, sq);

        let g1_first = t.backward(l1).unwrap();
        let g2 = t.backward(l2).unwrap();
        let g1_again = t.backward(l1).unwrap();

        assert_eq!(g1_first.get(p), g1_again.get(p));
        assert_eq!(g2.get(p), &[2.0, 4.0, 6.0]);
        assert_eq!(g1_first.get(p), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (a, b) = (0.7, -1.3);

        let mut t = Tape::new();
        let p = t.leaf(2, 3, vals).unwrap();
        let sq = t.square(p);
        let l1 = t.mean_all(p);
        let l2 = t.mean_all(sq);
        // a·L1 + b·L2
        let al1 = t.affine_scalar(l1, a, 0.0);
        let bl2 = t.affine_scalar(l2, b, 0.0);
        let combo = t.add(al1, bl2).unwrap();

        let g1 = t.backward(l1).unwrap();
        let g2 = t.backward(l2).unwrap();
        let gc = t.backward(combo).unwrap();
        for i in 0..6 {
            let expect = a * g1.get(p)[i] + b * g2.get(p)[i];
            assert!((gc.get(p)[i] - expect).abs() < 1e-12);
        }
    }

    /// Every differentiable op against central finite differences on random
    /// inputs, >= 50 trials per op.
    #[test]
    fn finite_difference_sweep_over_all_ops() {
        #[derive(Clone, Copy, Debug)]
        enum OpKind {
            MatMul,
            AddRowVec,
            Relu,
            Add,
            Sub,
            Square,
            Sqrt,
            SliceCols,
            SliceRows,
            RowMean,
            MeanAll,
            MulConst,
            AffineScalar,
        }
        let ops = [
            OpKind::MatMul,
            OpKind::AddRowVec,
            OpKind::Relu,
            OpKind::Add,
            OpKind::Sub,
            OpKind::Square,
            OpKind::Sqrt,
            OpKind::SliceCols,
            OpKind::SliceRows,
            OpKind::RowMean,
            OpKind::MeanAll,
            OpKind::MulConst,
            OpKind::AffineScalar,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let h = 1e-6;

        for op in ops {
            for _trial in 0..50 {
                let r = rng.gen_range(1..4usize);
                let c = rng.gen_range(2..5usize);
                // keep relu inputs away from the kink and sqrt inputs away from 0
                let sample = |rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize| -> Vec<f64> {
                    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
                };
                let primary = match op {
                    OpKind::Sqrt => sample(&mut rng, 0.2, 3.0, r * c),
                    OpKind::Relu => {
                        let mut v = sample(&mut rng, 0.05, 2.0, r * c);
                        for (i, x) in v.iter_mut().enumerate() {
                            if i % 2 == 0 {
                                *x = -*x;
                            }
                        }
                        v
                    }
                    _ => sample(&mut rng, -2.0, 2.0, r * c),
                };
                let aux = sample(&mut rng, -2.0, 2.0, r * c);
                let k = rng.gen_range(1..4usize);
                let rhs_mat = sample(&mut rng, -2.0, 2.0, c * k);
                let bias = sample(&mut rng, -1.0, 1.0, c);
                let factor = sample(&mut rng, -2.0, 2.0, r * c);
                let (sa, sb) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let slice_start = rng.gen_range(0..c);
                let slice_len = rng.gen_range(1..=c - slice_start);
                let row_start = rng.gen_range(0..r);
                let row_len = rng.gen_range(1..=r - row_start);

                let build = |tape: &mut Tape, x: Vec<f64>| -> (VarId, VarId) {
                    let xv = tape.leaf(r, c, x).unwrap();
                    let out = match op {
                        OpKind::MatMul => {
                            let m = tape.leaf(c, k, rhs_mat.clone()).unwrap();
                            tape.matmul(xv, m).unwrap()
                        }
                        OpKind::AddRowVec => {
                            let b = tape.leaf(1, c, bias.clone()).unwrap();
                            tape.add_row_vec(xv, b).unwrap()
                        }
                        OpKind::Relu => tape.relu(xv),
                        OpKind::Add => {
                            let o = tape.leaf(r, c, aux.clone()).unwrap();
                            tape.add(xv, o).unwrap()
                        }
                        OpKind::Sub => {
                            let o = tape.leaf(r, c, aux.clone()).unwrap();
                            tape.sub(xv, o).unwrap()
                        }
                        OpKind::Square => tape.square(xv),
                        OpKind::Sqrt => tape.sqrt(xv).unwrap(),
                        OpKind::SliceCols => tape.slice_cols(xv, slice_start, slice_len).unwrap(),
                        OpKind::SliceRows => tape.slice_rows(xv, row_start, row_len).unwrap(),
                        OpKind::RowMean => tape.row_mean(xv),
                        OpKind::MeanAll => tape.mean_all(xv),
                        OpKind::MulConst => tape.mul_const(xv, &factor).unwrap(),
                        OpKind::AffineScalar => tape.affine_scalar(xv, sa, sb),
                    };
                    // square before reducing so every element influences the scalar
                    let sq = tape.square(out);
                    (xv, tape.mean_all(sq))
                };

                let mut tape = Tape::new();
                let (xv, loss) = build(&mut tape, primary.clone());
                let grads = tape.backward(loss).unwrap();
                let analytic = grads.get(xv).to_vec();

                let eval = |x: Vec<f64>| -> f64 {
                    let mut t2 = Tape::new();
                    let (_, l) = build(&mut t2, x);
                    t2.scalar_value(l).unwrap()
                };
                for i in 0..primary.len() {
                    let mut xp = primary.clone();
                    let mut xm = primary.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (eval(xp) - eval(xm)) / (2.0 * h);
                    // relative tolerance plus an absolute floor for the
                    // roundoff noise central differences carry (~1e-9)
                    let scale = fd.abs().max(analytic[i].abs());
                    assert!(
                        (fd - analytic[i]).abs() < 1e-5 * scale + 1e-7,
                        "{op:?} element {i}: fd={fd}, analytic={}",
                        analytic[i]
                    );
                }
            }
        }
    }

    #[test]
    fn slice_rows_splits_a_stacked_batch() {
        // the trainer runs both origins through one forward pass and splits
        // the result by rows afterwards
        let mut t = Tape::new();
        let x = t
            .leaf(4, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
            .unwrap();
        let top = t.slice_rows(x, 0, 2).unwrap();
        let bottom = t.slice_rows(x, 2, 2).unwrap();
        assert_eq!(t.value(top), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.value(bottom), &[5.0, 6.0, 7.0, 8.0]);
        assert!(t.slice_rows(x, 3, 2).is_err());

        // gradient flows only into the sliced rows
        let sq = t.square(bottom);
        let loss = t.mean_all(sq);
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(x)[..4], [0.0; 4]);
        for (i, &v) in g.get(x)[4..].iter().enumerate() {
            let x_val = 5.0 + i as f64;
            assert!((v - 2.0 * x_val / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let run = || {
            let mut t = Tape::new();
            let x = t.leaf(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
            let w = t.leaf(3, 2, vec![1.0, -0.5, 0.25, 2.0, -1.0, 0.75]).unwrap();
            let y = t.matmul(x, w).unwrap();
            let r = t.relu(y);
            let m = t.mean_all(r);
            t.scalar_value(m).unwrap()
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }
}
