//! Reverse-mode tape over 2-D tensors.
//!
//! Every op appends a node holding its forward value and whatever it needs for
//! the backward pass. `backward` walks the nodes once in reverse.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How the right operand of a binary op is stretched to the left's shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bcast {
    Same,
    /// 1×n over m×n
    Row,
    /// m×1 over m×n
    Col,
    /// 1×1
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Reduce rows away: m×n → 1×n.
    Rows,
    /// Reduce columns away: m×n → m×1.
    Cols,
    All,
}

pub type SparseRows = Rc<Vec<Vec<(usize, f64)>>>;

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var, Bcast),
    Mul(Var, Var, Bcast),
    Scale(Var, f64),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Sum(Var, Axis),
    RepeatRows(Var),
    GatherRows(Var, Rc<Vec<usize>>),
    ScatterAddRows(Var, Rc<Vec<usize>>),
    SparseMatMul(SparseRows, Var),
    LeakyRelu(Var, f64),
    Relu(Var),
    Elu(Var, f64),
    /// Backward only needs the output.
    Softmax(Var),
    SegmentSoftmax(Var, Rc<Vec<usize>>, usize),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Tensor,
        inv_std: Vec<f64>,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<Option<usize>>,
        probs: Tensor,
        count: usize,
    },
    Dropout(Var, Tensor),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

pub struct Tape {
    nodes: Vec<Node>,
    training: bool,
    rng: ChaCha8Rng,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

fn bcast_kind(op: &'static str, a: &Tensor, b: &Tensor) -> Result<Bcast, TensorError> {
    if a.shape() == b.shape() {
        Ok(Bcast::Same)
    } else if b.rows == 1 && b.cols == 1 {
        Ok(Bcast::Scalar)
    } else if b.rows == 1 && b.cols == a.cols {
        Ok(Bcast::Row)
    } else if b.cols == 1 && b.rows == a.rows {
        Ok(Bcast::Col)
    } else {
        Err(mismatch(op, a, b))
    }
}

#[inline]
fn bidx(kind: Bcast, r: usize, c: usize, cols: usize) -> usize {
    match kind {
        Bcast::Same => r * cols + c,
        Bcast::Row => c,
        Bcast::Col => r,
        Bcast::Scalar => 0,
    }
}

/// Sums a full-shape gradient down to the broadcast operand's shape.
fn reduce_to(kind: Bcast, g: &Tensor, rows: usize, cols: usize) -> Tensor {
    if kind == Bcast::Same {
        return g.clone();
    }
    let mut out = Tensor::zeros(rows, cols);
    for r in 0..g.rows {
        for c in 0..g.cols {
            out.data[bidx(kind, r, c, g.cols)] += g.data[r * g.cols + c];
        }
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            training: false,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    /// Training tape: dropout is active and draws from a stream seeded here.
    pub fn training(seed: u64) -> Self {
        Tape {
            nodes: Vec::new(),
            training: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every node recorded after the first `len`. Vars pointing past
    /// the cut become invalid.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Trainable input.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let v = self.value(a).matmul(self.value(b))?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::MatMul(a, b), ng))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<(Tensor, Bcast), TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let kind = bcast_kind(name, ta, tb)?;
        let mut out = Tensor::zeros(ta.rows, ta.cols);
        for r in 0..ta.rows {
            for c in 0..ta.cols {
                let i = r * ta.cols + c;
                out.data[i] = f(ta.data[i], tb.data[bidx(kind, r, c, ta.cols)]);
            }
        }
        Ok((out, kind))
    }

    /// `a + b`, where `b` may be a row vector, column vector or scalar.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (v, kind) = self.binary("add", a, b, |x, y| x + y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::Add(a, b, kind), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let nb = self.scale(b, -1.0);
        self.add(a, nb)
    }

    /// Elementwise product with the same broadcasting as `add`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (v, kind) = self.binary("mul", a, b, |x, y| x * y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::Mul(a, b, kind), ng))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x * c);
        let ng = self.ng(a);
        self.push(v, Op::Scale(a, c), ng)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        let ng = self.ng(a);
        self.push(v, Op::Transpose(a), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let rows = self.value(parts[0]).rows;
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows != rows {
                return Err(mismatch("concat_cols", self.value(parts[0]), t));
            }
            cols += t.cols;
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let t = self.value(p);
            for r in 0..rows {
                out.data[r * cols + off..r * cols + off + t.cols].copy_from_slice(t.row(r));
            }
            off += t.cols;
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols != cols {
                return Err(mismatch("concat_rows", self.value(parts[0]), t));
            }
            data.extend_from_slice(&t.data);
            rows += t.rows;
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(Tensor { rows, cols, data }, Op::ConcatRows(parts.to_vec()), ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let t = self.value(a);
        if start + len > t.cols {
            return Err(mismatch("slice_cols", t, &Tensor::zeros(t.rows, start + len)));
        }
        let mut out = Tensor::zeros(t.rows, len);
        for r in 0..t.rows {
            out.row_mut(r).copy_from_slice(&t.row(r)[start..start + len]);
        }
        let ng = self.ng(a);
        Ok(self.push(out, Op::SliceCols(a, start), ng))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let t = self.value(a);
        if start + len > t.rows {
            return Err(mismatch("slice_rows", t, &Tensor::zeros(start + len, t.cols)));
        }
        let out = Tensor {
            rows: len,
            cols: t.cols,
            data: t.data[start * t.cols..(start + len) * t.cols].to_vec(),
        };
        let ng = self.ng(a);
        Ok(self.push(out, Op::SliceRows(a, start), ng))
    }

    pub fn sum(&mut self, a: Var, axis: Axis) -> Var {
        let t = self.value(a);
        let out = match axis {
            Axis::All => Tensor::scalar(t.sum()),
            Axis::Rows => {
                let mut o = Tensor::zeros(1, t.cols);
                for r in 0..t.rows {
                    for c in 0..t.cols {
                        o.data[c] += t.get(r, c);
                    }
                }
                o
            }
            Axis::Cols => {
                let mut o = Tensor::zeros(t.rows, 1);
                for r in 0..t.rows {
                    o.data[r] = t.row(r).iter().sum();
                }
                o
            }
        };
        let ng = self.ng(a);
        self.push(out, Op::Sum(a, axis), ng)
    }

    pub fn mean(&mut self, a: Var, axis: Axis) -> Var {
        let t = self.value(a);
        let n = match axis {
            Axis::All => t.len(),
            Axis::Rows => t.rows,
            Axis::Cols => t.cols,
        };
        let s = self.sum(a, axis);
        self.scale(s, 1.0 / n.max(1) as f64)
    }

    /// Stacks a 1×n row `times` times.
    pub fn repeat_rows(&mut self, a: Var, times: usize) -> Result<Var, TensorError> {
        let t = self.value(a);
        if t.rows != 1 {
            return Err(mismatch("repeat_rows", t, &Tensor::zeros(1, t.cols)));
        }
        let mut data = Vec::with_capacity(times * t.cols);
        for _ in 0..times {
            data.extend_from_slice(&t.data);
        }
        let out = Tensor {
            rows: times,
            cols: t.cols,
            data,
        };
        let ng = self.ng(a);
        Ok(self.push(out, Op::RepeatRows(a), ng))
    }

    /// Row `ids[k]` of `table` as output row `k` (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        if let Some(&bad) = ids.iter().find(|&&i| i >= t.rows) {
            return Err(TensorError::IndexOutOfRange {
                op: "gather_rows",
                index: bad,
                len: t.rows,
            });
        }
        let mut out = Tensor::zeros(ids.len(), t.cols);
        for (k, &i) in ids.iter().enumerate() {
            out.row_mut(k).copy_from_slice(t.row(i));
        }
        let ng = self.ng(table);
        Ok(self.push(out, Op::GatherRows(table, Rc::new(ids.to_vec())), ng))
    }

    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        self.gather_rows(table, ids)
    }

    /// Output row `index[k]` accumulates input row `k`; `n_out` output rows.
    pub fn scatter_add_rows(
        &mut self,
        src: Var,
        index: &[usize],
        n_out: usize,
    ) -> Result<Var, TensorError> {
        let t = self.value(src);
        if index.len() != t.rows {
            return Err(mismatch("scatter_add_rows", t, &Tensor::zeros(index.len(), t.cols)));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= n_out) {
            return Err(TensorError::IndexOutOfRange {
                op: "scatter_add_rows",
                index: bad,
                len: n_out,
            });
        }
        let mut out = Tensor::zeros(n_out, t.cols);
        for (k, &i) in index.iter().enumerate() {
            for (o, &x) in out.row_mut(i).iter_mut().zip(t.row(k)) {
                *o += x;
            }
        }
        let ng = self.ng(src);
        Ok(self.push(out, Op::ScatterAddRows(src, Rc::new(index.to_vec())), ng))
    }

    /// Constant sparse matrix (given as rows of `(column, value)`) times `w`.
    pub fn sparse_matmul(&mut self, rows: SparseRows, w: Var) -> Result<Var, TensorError> {
        let t = self.value(w);
        let mut out = Tensor::zeros(rows.len(), t.cols);
        for (r, entries) in rows.iter().enumerate() {
            for &(j, c) in entries {
                if j >= t.rows {
                    return Err(TensorError::IndexOutOfRange {
                        op: "sparse_matmul",
                        index: j,
                        len: t.rows,
                    });
                }
                for (o, &x) in out.row_mut(r).iter_mut().zip(t.row(j)) {
                    *o += c * x;
                }
            }
        }
        let ng = self.ng(w);
        Ok(self.push(out, Op::SparseMatMul(rows, w), ng))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        let ng = self.ng(a);
        self.push(v, Op::LeakyRelu(a, slope), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        let ng = self.ng(a);
        self.push(v, Op::Relu(a), ng)
    }

    pub fn elu(&mut self, a: Var, alpha: f64) -> Var {
        let v = self
            .value(a)
            .map(|x| if x > 0.0 { x } else { alpha * x.exp_m1() });
        let ng = self.ng(a);
        self.push(v, Op::Elu(a, alpha), ng)
    }

    /// Row softmax. `mask[i]` false forces an exact 0 at flat position `i`.
    pub fn softmax_rows(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var, TensorError> {
        let t = self.value(a);
        if let Some(m) = mask {
            if m.len() != t.len() {
                return Err(mismatch("softmax_rows", t, &Tensor::zeros(m.len(), 1)));
            }
        }
        let mut out = Tensor::zeros(t.rows, t.cols);
        for r in 0..t.rows {
            let keep = |c: usize| mask.map_or(true, |m| m[r * t.cols + c]);
            let mut mx = f64::NEG_INFINITY;
            for c in 0..t.cols {
                if keep(c) {
                    mx = mx.max(t.get(r, c));
                }
            }
            if mx == f64::NEG_INFINITY {
                return Err(TensorError::AllPositionsMasked);
            }
            let mut z = 0.0;
            for c in 0..t.cols {
                if keep(c) {
                    let e = (t.get(r, c) - mx).exp();
                    out.set(r, c, e);
                    z += e;
                }
            }
            for x in out.row_mut(r) {
                *x /= z;
            }
        }
        let ng = self.ng(a);
        Ok(self.push(out, Op::Softmax(a), ng))
    }

    /// Softmax of a column of scores within groups: entries with equal
    /// `segment[k]` are normalized together.
    pub fn segment_softmax(
        &mut self,
        scores: Var,
        segment: &[usize],
        n_segments: usize,
    ) -> Result<Var, TensorError> {
        let t = self.value(scores);
        if t.cols != 1 || t.rows != segment.len() {
            return Err(mismatch("segment_softmax", t, &Tensor::zeros(segment.len(), 1)));
        }
        let mut mx = vec![f64::NEG_INFINITY; n_segments];
        for (k, &s) in segment.iter().enumerate() {
            if s >= n_segments {
                return Err(TensorError::IndexOutOfRange {
                    op: "segment_softmax",
                    index: s,
                    len: n_segments,
                });
            }
            mx[s] = mx[s].max(t.data[k]);
        }
        let mut z = vec![0.0; n_segments];
        let mut out = Tensor::zeros(t.rows, 1);
        for (k, &s) in segment.iter().enumerate() {
            let e = (t.data[k] - mx[s]).exp();
            out.data[k] = e;
            z[s] += e;
        }
        for (k, &s) in segment.iter().enumerate() {
            out.data[k] /= z[s];
        }
        let ng = self.ng(scores);
        Ok(self.push(
            out,
            Op::SegmentSoftmax(scores, Rc::new(segment.to_vec()), n_segments),
            ng,
        ))
    }

    /// Per-row normalization to zero mean and unit variance, then `gain`
    /// and `bias` (both 1×n).
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var, TensorError> {
        let t = self.value(x);
        let (g, b) = (self.value(gain), self.value(bias));
        if g.shape() != [1, t.cols] || b.shape() != [1, t.cols] {
            return Err(mismatch("layer_norm", t, g));
        }
        let n = t.cols as f64;
        let mut xhat = Tensor::zeros(t.rows, t.cols);
        let mut inv_std = Vec::with_capacity(t.rows);
        let mut out = Tensor::zeros(t.rows, t.cols);
        for r in 0..t.rows {
            let row = t.row(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let is = 1.0 / (var + eps).sqrt();
            inv_std.push(is);
            for c in 0..t.cols {
                let h = (row[c] - mean) * is;
                xhat.set(r, c, h);
                out.set(r, c, h * g.data[c] + b.data[c]);
            }
        }
        let ng = self.ng(x) || self.ng(gain) || self.ng(bias);
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            ng,
        ))
    }

    /// Mean negative log-likelihood over rows whose target is not `ignore`.
    pub fn cross_entropy_masked(
        &mut self,
        logits: Var,
        targets: &[usize],
        ignore: usize,
    ) -> Result<Var, TensorError> {
        let t = self.value(logits);
        if targets.len() != t.rows {
            return Err(mismatch("cross_entropy_masked", t, &Tensor::zeros(targets.len(), 1)));
        }
        let mut probs = Tensor::zeros(t.rows, t.cols);
        let mut loss = 0.0;
        let mut count = 0;
        let mut kept = Vec::with_capacity(targets.len());
        for (r, &y) in targets.iter().enumerate() {
            if y == ignore {
                kept.push(None);
                continue;
            }
            if y >= t.cols {
                return Err(TensorError::IndexOutOfRange {
                    op: "cross_entropy_masked",
                    index: y,
                    len: t.cols,
                });
            }
            let row = t.row(r);
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - mx).exp()).sum();
            let logz = mx + z.ln();
            for c in 0..t.cols {
                probs.set(r, c, (row[c] - logz).exp());
            }
            loss += logz - row[y];
            count += 1;
            kept.push(Some(y));
        }
        if count == 0 {
            return Err(TensorError::AllPositionsMasked);
        }
        let ng = self.ng(logits);
        Ok(self.push(
            Tensor::scalar(loss / count as f64),
            Op::CrossEntropy {
                logits,
                targets: kept,
                probs,
                count,
            },
            ng,
        ))
    }

    /// Inverted dropout; identity on non-training tapes or when `p` is 0.
    pub fn dropout(&mut self, a: Var, p: f64) -> Var {
        if !self.training || p <= 0.0 {
            return a;
        }
        let t = self.value(a);
        let (rows, cols) = (t.rows, t.cols);
        let keep = 1.0 / (1.0 - p);
        let mask = Tensor {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| if self.rng.gen::<f64>() < p { 0.0 } else { keep })
                .collect(),
        };
        let t = self.value(a);
        let mut v = t.clone();
        for (x, m) in v.data.iter_mut().zip(&mask.data) {
            *x *= m;
        }
        let ng = self.ng(a);
        self.push(v, Op::Dropout(a, mask), ng)
    }

    /// Gradients of the 1×1 `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        if self.value(loss).shape() != [1, 1] {
            return Err(TensorError::NonScalarLoss(self.value(loss).shape()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut acc = |v: Var, t: Tensor| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&t),
                slot => *slot = Some(t),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    acc(*a, g.matmul(&tb.transpose()).expect("shapes checked"));
                }
                if self.ng(*b) {
                    acc(*b, ta.transpose().matmul(g).expect("shapes checked"));
                }
            }
            Op::Add(a, b, kind) => {
                acc(*a, g.clone());
                let tb = self.value(*b);
                acc(*b, reduce_to(*kind, g, tb.rows, tb.cols));
            }
            Op::Mul(a, b, kind) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let cols = ta.cols;
                if self.ng(*a) {
                    let mut ga = g.clone();
                    for r in 0..ga.rows {
                        for c in 0..cols {
                            ga.data[r * cols + c] *= tb.data[bidx(*kind, r, c, cols)];
                        }
                    }
                    acc(*a, ga);
                }
                if self.ng(*b) {
                    let mut full = g.clone();
                    for (x, y) in full.data.iter_mut().zip(&ta.data) {
                        *x *= y;
                    }
                    acc(*b, reduce_to(*kind, &full, tb.rows, tb.cols));
                }
            }
            Op::Scale(a, c) => acc(*a, g.map(|x| x * c)),
            Op::Transpose(a) => acc(*a, g.transpose()),
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = self.value(p).cols;
                    let mut gp = Tensor::zeros(g.rows, w);
                    for r in 0..g.rows {
                        gp.row_mut(r).copy_from_slice(&g.row(r)[off..off + w]);
                    }
                    acc(p, gp);
                    off += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let h = self.value(p).rows;
                    let gp = Tensor {
                        rows: h,
                        cols: g.cols,
                        data: g.data[off * g.cols..(off + h) * g.cols].to_vec(),
                    };
                    acc(p, gp);
                    off += h;
                }
            }
            Op::SliceCols(a, start) => {
                let ta = self.value(*a);
                let mut ga = Tensor::zeros(ta.rows, ta.cols);
                for r in 0..g.rows {
                    ga.row_mut(r)[*start..*start + g.cols].copy_from_slice(g.row(r));
                }
                acc(*a, ga);
            }
            Op::SliceRows(a, start) => {
                let ta = self.value(*a);
                let mut ga = Tensor::zeros(ta.rows, ta.cols);
                ga.data[start * ta.cols..(start + g.rows) * ta.cols].copy_from_slice(&g.data);
                acc(*a, ga);
            }
            Op::Sum(a, axis) => {
                let ta = self.value(*a);
                let mut ga = Tensor::zeros(ta.rows, ta.cols);
                for r in 0..ta.rows {
                    for c in 0..ta.cols {
                        ga.data[r * ta.cols + c] = match axis {
                            Axis::All => g.data[0],
                            Axis::Rows => g.data[c],
                            Axis::Cols => g.data[r],
                        };
                    }
                }
                acc(*a, ga);
            }
            Op::RepeatRows(a) => {
                let mut ga = Tensor::zeros(1, g.cols);
                for r in 0..g.rows {
                    for (x, &y) in ga.data.iter_mut().zip(g.row(r)) {
                        *x += y;
                    }
                }
                acc(*a, ga);
            }
            Op::GatherRows(table, ids) => {
                let tt = self.value(*table);
                let mut gt = Tensor::zeros(tt.rows, tt.cols);
                for (k, &i) in ids.iter().enumerate() {
                    for (x, &y) in gt.row_mut(i).iter_mut().zip(g.row(k)) {
                        *x += y;
                    }
                }
                acc(*table, gt);
            }
            Op::ScatterAddRows(src, index) => {
                let mut gs = Tensor::zeros(index.len(), g.cols);
                for (k, &i) in index.iter().enumerate() {
                    gs.row_mut(k).copy_from_slice(g.row(i));
                }
                acc(*src, gs);
            }
            Op::SparseMatMul(rows, w) => {
                let tw = self.value(*w);
                let mut gw = Tensor::zeros(tw.rows, tw.cols);
                for (r, entries) in rows.iter().enumerate() {
                    for &(j, c) in entries {
                        for (x, &y) in gw.row_mut(j).iter_mut().zip(g.row(r)) {
                            *x += c * y;
                        }
                    }
                }
                acc(*w, gw);
            }
            Op::LeakyRelu(a, slope) => {
                let ta = self.value(*a);
                let mut ga = g.clone();
                for (x, &v) in ga.data.iter_mut().zip(&ta.data) {
                    if v <= 0.0 {
                        *x *= slope;
                    }
                }
                acc(*a, ga);
            }
            Op::Relu(a) => {
                let ta = self.value(*a);
                let mut ga = g.clone();
                for (x, &v) in ga.data.iter_mut().zip(&ta.data) {
                    if v <= 0.0 {
                        *x = 0.0;
                    }
                }
                acc(*a, ga);
            }
            Op::Elu(a, alpha) => {
                let ta = self.value(*a);
                let mut ga = g.clone();
                for (x, &v) in ga.data.iter_mut().zip(&ta.data) {
                    if v <= 0.0 {
                        *x *= alpha * v.exp();
                    }
                }
                acc(*a, ga);
            }
            Op::Softmax(a) => {
                let y = &node.value;
                let mut ga = Tensor::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let dot: f64 = y.row(r).iter().zip(g.row(r)).map(|(p, q)| p * q).sum();
                    for c in 0..y.cols {
                        ga.set(r, c, y.get(r, c) * (g.get(r, c) - dot));
                    }
                }
                acc(*a, ga);
            }
            Op::SegmentSoftmax(a, segment, n) => {
                let y = &node.value;
                let mut dot = vec![0.0; *n];
                for (k, &s) in segment.iter().enumerate() {
                    dot[s] += y.data[k] * g.data[k];
                }
                let mut ga = Tensor::zeros(y.rows, 1);
                for (k, &s) in segment.iter().enumerate() {
                    ga.data[k] = y.data[k] * (g.data[k] - dot[s]);
                }
                acc(*a, ga);
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let gv = self.value(*gain);
                let n = xhat.cols as f64;
                if self.ng(*gain) || self.ng(*bias) {
                    let mut gg = Tensor::zeros(1, xhat.cols);
                    let mut gb = Tensor::zeros(1, xhat.cols);
                    for r in 0..xhat.rows {
                        for c in 0..xhat.cols {
                            gg.data[c] += g.get(r, c) * xhat.get(r, c);
                            gb.data[c] += g.get(r, c);
                        }
                    }
                    acc(*gain, gg);
                    acc(*bias, gb);
                }
                if self.ng(*x) {
                    let mut gx = Tensor::zeros(xhat.rows, xhat.cols);
                    for r in 0..xhat.rows {
                        let dxh: Vec<f64> =
                            (0..xhat.cols).map(|c| g.get(r, c) * gv.data[c]).collect();
                        let s1: f64 = dxh.iter().sum();
                        let s2: f64 = dxh.iter().zip(xhat.row(r)).map(|(d, h)| d * h).sum();
                        for c in 0..xhat.cols {
                            let v = inv_std[r] / n * (n * dxh[c] - s1 - xhat.get(r, c) * s2);
                            gx.set(r, c, v);
                        }
                    }
                    acc(*x, gx);
                }
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
                count,
            } => {
                let scale = g.data[0] / *count as f64;
                let mut gl = Tensor::zeros(probs.rows, probs.cols);
                for (r, t) in targets.iter().enumerate() {
                    if let Some(y) = t {
                        for c in 0..probs.cols {
                            gl.set(r, c, probs.get(r, c) * scale);
                        }
                        gl.data[r * probs.cols + y] -= scale;
                    }
                }
                acc(*logits, gl);
            }
            Op::Dropout(a, mask) => {
                let mut ga = g.clone();
                for (x, m) in ga.data.iter_mut().zip(&mask.data) {
                    *x *= m;
                }
                acc(*a, ga);
            }
        }
    }
}

/// Result of `Tape::backward`.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, zeros if the loss does not depend on it.
    pub fn of(&self, v: Var, tape: &Tape) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| {
            let t = tape.value(v);
            Tensor::zeros(t.rows, t.cols)
        })
    }
}
