//! Recording tape for reverse-mode differentiation.
//!
//! Every operation pushes a node holding the output tensor and enough
//! information to replay its local gradient rule. Nodes are appended in
//! execution order, so the tape index order is already topological and the
//! backward sweep is a single reverse pass.

use crate::error::TensorError;
use crate::tensor::Tensor;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    MulElem { a: Var, b: Var },
    MinElem { a: Var, b: Var },
    Scale { a: Var, factor: f64 },
    AddScalar { a: Var },
    Clamp { a: Var, lo: f64, hi: f64 },
    Tanh { a: Var },
    Exp { a: Var },
    SoftmaxRows { a: Var },
    Transpose { a: Var },
    Reshape { a: Var },
    SumAll { a: Var },
    ConcatCols { parts: Vec<Var> },
    SliceCols { a: Var, start: usize, end: usize },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Single-owner computation tape. One tape per forward pass.
#[derive(Debug, Default)]
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

    /// Records a leaf that does not receive gradients.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(t.clone(), Op::Leaf, false)
    }

    /// Records a trainable leaf; `backward` populates its gradient.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push(t.clone(), Op::Leaf, true)
    }

    pub fn scalar_const(&mut self, value: f64) -> Var {
        self.constant(&Tensor::scalar(value))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Value of a one-element tensor.
    pub fn scalar_value(&self, v: Var) -> Result<f64, TensorError> {
        let t = self.value(v);
        if t.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: t.shape().to_vec(),
            });
        }
        Ok(t.data()[0])
    }

    /// Gradient populated by the last `backward` call, if this node needs one.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_derived(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(value, op, requires_grad)
    }

    fn matrix_dims(&self, v: Var, op: &'static str) -> Result<(usize, usize), TensorError> {
        let t = self.value(v);
        if !t.is_matrix() {
            return Err(TensorError::NotAMatrix {
                op,
                shape: t.shape().to_vec(),
            });
        }
        Ok((t.shape()[0], t.shape()[1]))
    }

    fn check_same_shape(&self, a: Var, b: Var, op: &'static str) -> Result<(), TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::DimensionMismatch {
                op,
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    // ── Forward operations ───────────────────────────────────────────

    /// `a(m,n) · b(n,p) -> (m,p)`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, n) = self.matrix_dims(a, "matmul")?;
        let (n2, p) = self.matrix_dims(b, "matmul")?;
        if n != n2 {
            return Err(TensorError::DimensionMismatch {
                op: "matmul",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let out = mat_mul(self.value(a).data(), self.value(b).data(), m, n, p);
        let value = Tensor::matrix(m, p, out)?;
        Ok(self.push_derived(value, Op::MatMul { a, b }, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check_same_shape(a, b, "add")?;
        let data = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x + y);
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push_derived(value, Op::Add { a, b }, &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check_same_shape(a, b, "sub")?;
        let data = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x - y);
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push_derived(value, Op::Sub { a, b }, &[a, b]))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul_elem(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check_same_shape(a, b, "mul_elem")?;
        let data = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x * y);
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push_derived(value, Op::MulElem { a, b }, &[a, b]))
    }

    /// Elementwise minimum; on ties the gradient flows to `a`.
    pub fn min_elem(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check_same_shape(a, b, "min_elem")?;
        let data = zip_map(self.value(a).data(), self.value(b).data(), f64::min);
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push_derived(value, Op::MinElem { a, b }, &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let data = self.value(a).data().iter().map(|x| x * factor).collect();
        let value = Tensor::new(self.shape(a).to_vec(), data).expect("shape preserved");
        self.push_derived(value, Op::Scale { a, factor }, &[a])
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn add_scalar(&mut self, a: Var, offset: f64) -> Var {
        let data = self.value(a).data().iter().map(|x| x + offset).collect();
        let value = Tensor::new(self.shape(a).to_vec(), data).expect("shape preserved");
        self.push_derived(value, Op::AddScalar { a }, &[a])
    }

    /// Elementwise clamp to `[lo, hi]`; gradient passes inside the interval
    /// (boundary included) and is zero outside.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var, TensorError> {
        if lo > hi {
            return Err(TensorError::InvertedClamp { lo, hi });
        }
        let data = self.value(a).data().iter().map(|x| x.clamp(lo, hi)).collect();
        let value = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.push_derived(value, Op::Clamp { a, lo, hi }, &[a]))
    }

    pub fn tanh_elem(&mut self, a: Var) -> Var {
        let data = self.value(a).data().iter().map(|x| x.tanh()).collect();
        let value = Tensor::new(self.shape(a).to_vec(), data).expect("shape preserved");
        self.push_derived(value, Op::Tanh { a }, &[a])
    }

    pub fn exp_elem(&mut self, a: Var) -> Var {
        let data = self.value(a).data().iter().map(|x| x.exp()).collect();
        let value = Tensor::new(self.shape(a).to_vec(), data).expect("shape preserved");
        self.push_derived(value, Op::Exp { a }, &[a])
    }

    /// Row-wise softmax with max-subtraction for overflow safety.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let (rows, cols) = self.matrix_dims(a, "softmax_rows")?;
        let input = self.value(a).data();
        if input.iter().any(|x| x.is_nan()) {
            return Err(TensorError::NonFinite { op: "softmax_rows" });
        }
        let mut data = vec![0.0; input.len()];
        for r in 0..rows {
            let row = &input[r * cols..(r + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (c, x) in row.iter().enumerate() {
                let e = (x - max).exp();
                data[r * cols + c] = e;
                sum += e;
            }
            for c in 0..cols {
                data[r * cols + c] /= sum;
            }
        }
        let value = Tensor::matrix(rows, cols, data)?;
        Ok(self.push_derived(value, Op::SoftmaxRows { a }, &[a]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let (rows, cols) = self.matrix_dims(a, "transpose")?;
        let input = self.value(a).data();
        let mut data = vec![0.0; input.len()];
        for r in 0..rows {
            for c in 0..cols {
                data[c * rows + r] = input[r * cols + c];
            }
        }
        let value = Tensor::matrix(cols, rows, data)?;
        Ok(self.push_derived(value, Op::Transpose { a }, &[a]))
    }

    /// Reinterprets the row-major buffer under a new shape.
    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != self.value(a).numel() {
            return Err(TensorError::DimensionMismatch {
                op: "reshape",
                left: self.shape(a).to_vec(),
                right: shape,
            });
        }
        let value = Tensor::new(shape, self.value(a).data().to_vec())?;
        Ok(self.push_derived(value, Op::Reshape { a }, &[a]))
    }

    /// Sum of all entries, as a `[1]` tensor.
    pub fn sum_all(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).data().iter().sum();
        self.push_derived(Tensor::scalar(s), Op::SumAll { a }, &[a])
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.value(a).numel();
        let s = self.sum_all(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// Concatenates matrices with equal row counts along the column axis.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::EmptyInput { op: "concat_cols" });
        }
        let (rows, _) = self.matrix_dims(parts[0], "concat_cols")?;
        let mut total_cols = 0;
        for &p in parts {
            let (r, c) = self.matrix_dims(p, "concat_cols")?;
            if r != rows {
                return Err(TensorError::DimensionMismatch {
                    op: "concat_cols",
                    left: self.shape(parts[0]).to_vec(),
                    right: self.shape(p).to_vec(),
                });
            }
            total_cols += c;
        }
        let mut data = vec![0.0; rows * total_cols];
        let mut offset = 0;
        for &p in parts {
            let cols = self.value(p).shape()[1];
            let source = self.value(p).data();
            for r in 0..rows {
                data[r * total_cols + offset..r * total_cols + offset + cols]
                    .copy_from_slice(&source[r * cols..(r + 1) * cols]);
            }
            offset += cols;
        }
        let value = Tensor::matrix(rows, total_cols, data)?;
        Ok(self.push_derived(value, Op::ConcatCols { parts: parts.to_vec() }, parts))
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        let (rows, cols) = self.matrix_dims(a, "slice_cols")?;
        if start >= end || end > cols {
            return Err(TensorError::ColumnRange {
                op: "slice_cols",
                start,
                end,
                cols,
            });
        }
        let width = end - start;
        let input = self.value(a).data();
        let mut data = vec![0.0; rows * width];
        for r in 0..rows {
            data[r * width..(r + 1) * width]
                .copy_from_slice(&input[r * cols + start..r * cols + end]);
        }
        let value = Tensor::matrix(rows, width, data)?;
        Ok(self.push_derived(value, Op::SliceCols { a, start, end }, &[a]))
    }

    // ── Backward ─────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss. Gradients of earlier calls are
    /// discarded; every `requires_grad` node reachable from the loss ends up
    /// with a populated gradient accumulator.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        if self.value(loss).numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: self.shape(loss).to_vec(),
            });
        }
        for node in &mut self.nodes {
            node.value.clear_grad();
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.numel()])
            .collect();
        grads[loss.0][0] = 1.0;

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let op = self.nodes[idx].op.clone();
            let g = std::mem::take(&mut grads[idx]);
            match op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let (m, n) = (self.shape(a)[0], self.shape(a)[1]);
                    let p = self.shape(b)[1];
                    // dA = G · Bᵀ, dB = Aᵀ · G
                    let bt = transpose_buf(self.value(b).data(), n, p);
                    let da = mat_mul(&g, &bt, m, p, n);
                    let at = transpose_buf(self.value(a).data(), m, n);
                    let db = mat_mul(&at, &g, n, m, p);
                    add_into(&mut grads[a.0], &da);
                    add_into(&mut grads[b.0], &db);
                }
                Op::Add { a, b } => {
                    add_into(&mut grads[a.0], &g);
                    add_into(&mut grads[b.0], &g);
                }
                Op::Sub { a, b } => {
                    add_into(&mut grads[a.0], &g);
                    for (dst, gi) in grads[b.0].iter_mut().zip(&g) {
                        *dst -= gi;
                    }
                }
                Op::MulElem { a, b } => {
                    let (av, bv) = (self.value(a).data().to_vec(), self.value(b).data().to_vec());
                    for (i, gi) in g.iter().enumerate() {
                        grads[a.0][i] += gi * bv[i];
                        grads[b.0][i] += gi * av[i];
                    }
                }
                Op::MinElem { a, b } => {
                    let (av, bv) = (self.value(a).data().to_vec(), self.value(b).data().to_vec());
                    for (i, gi) in g.iter().enumerate() {
                        if av[i] <= bv[i] {
                            grads[a.0][i] += gi;
                        } else {
                            grads[b.0][i] += gi;
                        }
                    }
                }
                Op::Scale { a, factor } => {
                    for (dst, gi) in grads[a.0].iter_mut().zip(&g) {
                        *dst += factor * gi;
                    }
                }
                Op::AddScalar { a } => add_into(&mut grads[a.0], &g),
                Op::Clamp { a, lo, hi } => {
                    let av = self.value(a).data().to_vec();
                    for (i, gi) in g.iter().enumerate() {
                        if av[i] >= lo && av[i] <= hi {
                            grads[a.0][i] += gi;
                        }
                    }
                }
                Op::Tanh { a } => {
                    let y = self.nodes[idx].value.data().to_vec();
                    for (i, gi) in g.iter().enumerate() {
                        grads[a.0][i] += gi * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Exp { a } => {
                    let y = self.nodes[idx].value.data().to_vec();
                    for (i, gi) in g.iter().enumerate() {
                        grads[a.0][i] += gi * y[i];
                    }
                }
                Op::SoftmaxRows { a } => {
                    // dx_row = y ⊙ (g − ⟨g, y⟩)
                    let y = self.nodes[idx].value.data().to_vec();
                    let cols = self.shape(a)[1];
                    let rows = self.shape(a)[0];
                    for r in 0..rows {
                        let span = r * cols..(r + 1) * cols;
                        let dot: f64 = g[span.clone()]
                            .iter()
                            .zip(&y[span.clone()])
                            .map(|(gi, yi)| gi * yi)
                            .sum();
                        for c in 0..cols {
                            let i = r * cols + c;
                            grads[a.0][i] += y[i] * (g[i] - dot);
                        }
                    }
                }
                Op::Transpose { a } => {
                    let (rows, cols) = (self.shape(a)[0], self.shape(a)[1]);
                    // g has shape (cols, rows)
                    for r in 0..rows {
                        for c in 0..cols {
                            grads[a.0][r * cols + c] += g[c * rows + r];
                        }
                    }
                }
                Op::Reshape { a } => add_into(&mut grads[a.0], &g),
                Op::SumAll { a } => {
                    let gi = g[0];
                    for dst in grads[a.0].iter_mut() {
                        *dst += gi;
                    }
                }
                Op::ConcatCols { parts } => {
                    let rows = self.shape(parts[0])[0];
                    let total_cols: usize = parts.iter().map(|p| self.shape(*p)[1]).sum();
                    let mut offset = 0;
                    for &p in &parts {
                        let cols = self.shape(p)[1];
                        for r in 0..rows {
                            for c in 0..cols {
                                grads[p.0][r * cols + c] += g[r * total_cols + offset + c];
                            }
                        }
                        offset += cols;
                    }
                }
                Op::SliceCols { a, start, end } => {
                    let cols = self.shape(a)[1];
                    let rows = self.shape(a)[0];
                    let width = end - start;
                    for r in 0..rows {
                        for c in 0..width {
                            grads[a.0][r * cols + start + c] += g[r * width + c];
                        }
                    }
                }
            }
            grads[idx] = g;
        }

        for (idx, node) in self.nodes.iter_mut().enumerate() {
            if node.requires_grad {
                node.value.set_grad(std::mem::take(&mut grads[idx]));
            }
        }
        Ok(())
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn transpose_buf(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Row-major `a(m,n) · b(n,p)`.
fn mat_mul(a: &[f64], b: &[f64], m: usize, n: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * p];
    for i in 0..m {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * p..(k + 1) * p];
            let orow = &mut out[i * p..(i + 1) * p];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}
