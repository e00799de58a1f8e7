//! Minimal dense-tensor numerics with reverse-mode differentiation.
//!
//! Everything is double precision. A [`Tape`] records the forward
//! computation of one training example as an append-only list of
//! operations over a flat value arena; [`Tape::backward`] replays it
//! in strict reverse order, accumulating exact vector-Jacobian
//! products into per-node gradients and, for parameter-touching
//! operations, into a [`GradStore`] aligned with the [`ParamSet`].
//!
//! Learnable tensors live outside the tape in a [`ParamSet`] and are
//! referenced by id, so rebuilding the tape per example never copies
//! parameter storage. The tape keeps its buffers across
//! [`Tape::reset`] calls to avoid re-allocating inside training loops.

pub mod checkpoint;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// A dense tensor: a shape and a flat value buffer in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape/value count mismatch"
        );
        debug_assert!(data.iter().all(|v| v.is_finite()), "non-finite tensor");
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor::new(vec![data.len()], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rows of a matrix (1 for vectors).
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[0],
            _ => 1,
        }
    }

    /// Columns of a matrix (the full length for vectors).
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[1],
            _ => self.data.len(),
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }
}

/// Handle to a parameter tensor in a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(usize);

/// Named parameter tensors; the mutable state of a model.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    by_name: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        assert!(
            !self.by_name.contains_key(name),
            "duplicate parameter {name:?}"
        );
        let id = self.tensors.len();
        self.by_name.insert(name.to_string(), id);
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total scalar parameter count.
    pub fn value_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// All parameter ids in registration order.
    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    /// Parameters in byte-stable order (sorted by name).
    pub fn iter_sorted(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        let mut order: Vec<usize> = (0..self.names.len()).collect();
        order.sort_by(|&a, &b| self.names[a].cmp(&self.names[b]));
        order
            .into_iter()
            .map(move |i| (self.names[i].as_str(), &self.tensors[i]))
    }

    /// One SGD step: `theta -= lr * grad`.
    pub fn sgd_step(&mut self, grads: &GradStore, lr: f64) {
        assert_eq!(grads.tensors.len(), self.tensors.len());
        for (t, g) in self.tensors.iter_mut().zip(&grads.tensors) {
            for (v, gv) in t.data.iter_mut().zip(&g.data) {
                *v -= lr * gv;
            }
        }
    }
}

/// Dense gradients aligned with a [`ParamSet`]. Parameters untouched
/// by a backward pass hold zeros.
#[derive(Clone, Debug)]
pub struct GradStore {
    tensors: Vec<Tensor>,
}

impl GradStore {
    pub fn new_like(params: &ParamSet) -> Self {
        GradStore {
            tensors: params
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.shape.clone()))
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.fill(0.0);
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Handle to a value node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    EmbedLookup { table: ParamId, row: usize },
    Affine { w: ParamId, x: NodeId, b: Option<ParamId> },
    Relu { x: NodeId },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    Concat { a: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    AddConst { x: NodeId },
    Scale { x: NodeId, c: f64 },
    Slice { x: NodeId, start: usize },
    SelectRow { x: NodeId, row: usize },
    SelectScalar { x: NodeId, index: usize },
    LogSumExp { x: NodeId },
    SumScalars { xs: Box<[NodeId]> },
    CustomScalar { xs: Box<[NodeId]>, local: Box<[f64]> },
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    off: usize,
    len: usize,
    cols: usize,
}

/// Append-only record of one forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    vals: Vec<f64>,
    grads: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Clears the tape, keeping buffer capacity for reuse.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.vals.clear();
        self.grads.clear();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn push(&mut self, op: Op, len: usize, cols: usize) -> (NodeId, usize) {
        let off = self.vals.len();
        self.vals.resize(off + len, 0.0);
        self.nodes.push(Node { op, off, len, cols });
        (NodeId(self.nodes.len() - 1), off)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        let n = &self.nodes[id.0];
        &self.vals[n.off..n.off + n.len]
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.len(), 1, "scalar access on a non-scalar node");
        v[0]
    }

    pub fn len_of(&self, id: NodeId) -> usize {
        self.nodes[id.0].len
    }

    /// Gradient of the last backward root with respect to this node.
    pub fn node_grad(&self, id: NodeId) -> &[f64] {
        assert!(!self.grads.is_empty(), "backward has not run");
        let n = &self.nodes[id.0];
        &self.grads[n.off..n.off + n.len]
    }

    /// Records a constant input vector.
    pub fn leaf(&mut self, data: &[f64]) -> NodeId {
        debug_assert!(data.iter().all(|v| v.is_finite()));
        let (id, off) = self.push(Op::Leaf, data.len(), data.len());
        self.vals[off..off + data.len()].copy_from_slice(data);
        id
    }

    /// Records a constant input matrix.
    pub fn leaf_matrix(&mut self, rows: usize, cols: usize, data: &[f64]) -> NodeId {
        assert_eq!(rows * cols, data.len());
        let (id, off) = self.push(Op::Leaf, data.len(), cols);
        self.vals[off..off + data.len()].copy_from_slice(data);
        id
    }

    /// Records a zero vector.
    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.push(Op::Leaf, len, len).0
    }

    /// Row `row` of an embedding table.
    pub fn embed_lookup(&mut self, params: &ParamSet, table: ParamId, row: usize) -> NodeId {
        let t = params.get(table);
        let cols = t.cols();
        assert!(row < t.rows(), "embedding row out of range");
        let (id, off) = self.push(Op::EmbedLookup { table, row }, cols, cols);
        self.vals[off..off + cols].copy_from_slice(&t.data()[row * cols..(row + 1) * cols]);
        id
    }

    /// `W x (+ b)` with a parameter matrix and optional bias.
    pub fn affine(
        &mut self,
        params: &ParamSet,
        w: ParamId,
        x: NodeId,
        b: Option<ParamId>,
    ) -> NodeId {
        let wt = params.get(w);
        let (rows, cols) = (wt.rows(), wt.cols());
        assert_eq!(cols, self.len_of(x), "affine input dimension mismatch");
        if let Some(b) = b {
            assert_eq!(params.get(b).len(), rows, "affine bias dimension mismatch");
        }
        let (id, off) = self.push(Op::Affine { w, x, b }, rows, rows);
        let xn = &self.nodes[x.0];
        let (xoff, xlen) = (xn.off, xn.len);
        let wd = wt.data();
        for r in 0..rows {
            let wrow = &wd[r * cols..(r + 1) * cols];
            let mut acc = match b {
                Some(b) => params.get(b).data()[r],
                None => 0.0,
            };
            for i in 0..cols {
                acc += wrow[i] * self.vals[xoff + i];
            }
            self.vals[off + r] = acc;
        }
        let _ = xlen;
        id
    }

    fn unary(&mut self, op: Op, x: NodeId, f: impl Fn(f64) -> f64) -> NodeId {
        let xn = &self.nodes[x.0];
        let (xoff, len, cols) = (xn.off, xn.len, xn.cols);
        let (id, off) = self.push(op, len, cols);
        for i in 0..len {
            self.vals[off + i] = f(self.vals[xoff + i]);
        }
        id
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Relu { x }, x, |v| v.max(0.0))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Sigmoid { x }, x, |v| 1.0 / (1.0 + (-v).exp()))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Tanh { x }, x, f64::tanh)
    }

    /// Elementwise scale by a constant.
    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        self.unary(Op::Scale { x, c }, x, |v| c * v)
    }

    /// Adds a constant vector (no gradient flows into the constant).
    pub fn add_const(&mut self, x: NodeId, c: &[f64]) -> NodeId {
        let xn = &self.nodes[x.0];
        let (xoff, len, cols) = (xn.off, xn.len, xn.cols);
        assert_eq!(len, c.len());
        let (id, off) = self.push(Op::AddConst { x }, len, cols);
        for i in 0..len {
            self.vals[off + i] = self.vals[xoff + i] + c[i];
        }
        id
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (aoff, alen) = {
            let n = &self.nodes[a.0];
            (n.off, n.len)
        };
        let (boff, blen) = {
            let n = &self.nodes[b.0];
            (n.off, n.len)
        };
        let len = alen + blen;
        let (id, off) = self.push(Op::Concat { a, b }, len, len);
        self.vals.copy_within(aoff..aoff + alen, off);
        self.vals.copy_within(boff..boff + blen, off + alen);
        id
    }

    fn binary(&mut self, op: Op, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> NodeId {
        let (aoff, len, cols) = {
            let n = &self.nodes[a.0];
            (n.off, n.len, n.cols)
        };
        let boff = {
            let n = &self.nodes[b.0];
            assert_eq!(n.len, len, "elementwise shape mismatch");
            n.off
        };
        let (id, off) = self.push(op, len, cols);
        for i in 0..len {
            self.vals[off + i] = f(self.vals[aoff + i], self.vals[boff + i]);
        }
        id
    }

    /// Elementwise addition.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Add { a, b }, a, b, |x, y| x + y)
    }

    /// Elementwise subtraction.
    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Sub { a, b }, a, b, |x, y| x - y)
    }

    /// Elementwise (pointwise) multiplication.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Mul { a, b }, a, b, |x, y| x * y)
    }

    /// Adds a scalar increment onto a running scalar.
    pub fn scalar_accumulate(&mut self, running: NodeId, increment: NodeId) -> NodeId {
        assert_eq!(self.len_of(running), 1);
        assert_eq!(self.len_of(increment), 1);
        self.add(running, increment)
    }

    /// Contiguous sub-vector `x[start..start+len]`.
    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let (xoff, xlen) = {
            let n = &self.nodes[x.0];
            (n.off, n.len)
        };
        assert!(start + len <= xlen, "slice out of range");
        let (id, off) = self.push(Op::Slice { x, start }, len, len);
        self.vals.copy_within(xoff + start..xoff + start + len, off);
        id
    }

    /// Row `row` of a matrix node.
    pub fn select_row(&mut self, x: NodeId, row: usize) -> NodeId {
        let (xoff, xlen, cols) = {
            let n = &self.nodes[x.0];
            (n.off, n.len, n.cols)
        };
        assert!(cols > 0 && xlen % cols == 0, "select_row on a non-matrix");
        assert!(row < xlen / cols, "row out of range");
        let (id, off) = self.push(Op::SelectRow { x, row }, cols, cols);
        self.vals
            .copy_within(xoff + row * cols..xoff + (row + 1) * cols, off);
        id
    }

    /// Single element `x[index]` as a scalar node.
    pub fn select_scalar(&mut self, x: NodeId, index: usize) -> NodeId {
        let (xoff, xlen) = {
            let n = &self.nodes[x.0];
            (n.off, n.len)
        };
        assert!(index < xlen, "index out of range");
        let (id, off) = self.push(Op::SelectScalar { x, index }, 1, 1);
        self.vals[off] = self.vals[xoff + index];
        id
    }

    /// Max-shifted `log Σ exp(x_i)` as a scalar node.
    pub fn logsumexp(&mut self, x: NodeId) -> NodeId {
        let (xoff, xlen) = {
            let n = &self.nodes[x.0];
            (n.off, n.len)
        };
        assert!(xlen >= 1);
        let xs = &self.vals[xoff..xoff + xlen];
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = xs.iter().map(|v| (v - max).exp()).sum();
        let out = max + sum.ln();
        let (id, off) = self.push(Op::LogSumExp { x }, 1, 1);
        self.vals[off] = out;
        id
    }

    /// Sum of scalar nodes. An empty list yields a constant zero.
    pub fn sum_scalars(&mut self, xs: &[NodeId]) -> NodeId {
        let mut total = 0.0;
        for &x in xs {
            total += self.scalar(x);
        }
        let (id, off) = self.push(
            Op::SumScalars {
                xs: xs.to_vec().into_boxed_slice(),
            },
            1,
            1,
        );
        self.vals[off] = total;
        id
    }

    /// A scalar node with an externally computed value and fixed local
    /// gradients with respect to its scalar inputs. Backward scatters
    /// `upstream * local[i]` into input `i`. This is how per-beam
    /// surrogate losses join the tape: their value and subgradient are
    /// evaluated at the current scores.
    pub fn custom_scalar(&mut self, value: f64, xs: &[NodeId], local: &[f64]) -> NodeId {
        assert_eq!(xs.len(), local.len(), "inputs/local gradient mismatch");
        debug_assert!(xs.iter().all(|&x| self.len_of(x) == 1));
        let (id, off) = self.push(
            Op::CustomScalar {
                xs: xs.to_vec().into_boxed_slice(),
                local: local.to_vec().into_boxed_slice(),
            },
            1,
            1,
        );
        self.vals[off] = value;
        id
    }

    /// Reverse pass from a scalar root. Node gradients become
    /// available through [`Tape::node_grad`]; parameter gradients
    /// accumulate into `grads`, which is zeroed first so untouched
    /// parameters map to zero.
    pub fn backward(&mut self, root: NodeId, params: &ParamSet, grads: &mut GradStore) {
        assert_eq!(self.len_of(root), 1, "backward root must be a scalar");
        grads.zero();
        self.grads.clear();
        self.grads.resize(self.vals.len(), 0.0);
        self.grads[self.nodes[root.0].off] = 1.0;

        for idx in (0..=root.0).rev() {
            // split borrows: node metadata is cloned cheaply (ops hold
            // only ids and small boxes)
            let node = self.nodes[idx].clone();
            let (off, len) = (node.off, node.len);
            match node.op {
                Op::Leaf => {}
                Op::EmbedLookup { table, row } => {
                    let g = grads.get_mut(table);
                    let cols = g.cols();
                    let dst = &mut g.data_mut()[row * cols..(row + 1) * cols];
                    for i in 0..len {
                        dst[i] += self.grads[off + i];
                    }
                }
                Op::Affine { w, x, b } => {
                    let xn = &self.nodes[x.0];
                    let (xoff, xlen) = (xn.off, xn.len);
                    let wt = params.get(w);
                    let cols = wt.cols();
                    // dW += outer(g, x)
                    {
                        let gw = grads.get_mut(w);
                        let gwd = gw.data_mut();
                        for r in 0..len {
                            let g = self.grads[off + r];
                            if g == 0.0 {
                                continue;
                            }
                            let dst = &mut gwd[r * cols..(r + 1) * cols];
                            for i in 0..xlen {
                                dst[i] += g * self.vals[xoff + i];
                            }
                        }
                    }
                    // dx += W^T g
                    {
                        let wd = wt.data();
                        for r in 0..len {
                            let g = self.grads[off + r];
                            if g == 0.0 {
                                continue;
                            }
                            let wrow = &wd[r * cols..(r + 1) * cols];
                            for i in 0..xlen {
                                self.grads[xoff + i] += g * wrow[i];
                            }
                        }
                    }
                    // db += g
                    if let Some(b) = b {
                        let gb = grads.get_mut(b).data_mut();
                        for r in 0..len {
                            gb[r] += self.grads[off + r];
                        }
                    }
                }
                Op::Relu { x } => {
                    let xoff = self.nodes[x.0].off;
                    for i in 0..len {
                        if self.vals[off + i] > 0.0 {
                            self.grads[xoff + i] += self.grads[off + i];
                        }
                    }
                }
                Op::Sigmoid { x } => {
                    let xoff = self.nodes[x.0].off;
                    for i in 0..len {
                        let y = self.vals[off + i];
                        self.grads[xoff + i] += self.grads[off + i] * y * (1.0 - y);
                    }
                }
                Op::Tanh { x } => {
                    let xoff = self.nodes[x.0].off;
                    for i in 0..len {
                        let y = self.vals[off + i];
                        self.grads[xoff + i] += self.grads[off + i] * (1.0 - y * y);
                    }
                }
                Op::Concat { a, b } => {
                    let (aoff, alen) = {
                        let n = &self.nodes[a.0];
                        (n.off, n.len)
                    };
                    let boff = self.nodes[b.0].off;
                    for i in 0..alen {
                        self.grads[aoff + i] += self.grads[off + i];
                    }
                    for i in 0..len - alen {
                        self.grads[boff + i] += self.grads[off + alen + i];
                    }
                }
                Op::Add { a, b } => {
                    let aoff = self.nodes[a.0].off;
                    let boff = self.nodes[b.0].off;
                    for i in 0..len {
                        self.grads[aoff + i] += self.grads[off + i];
                        self.grads[boff + i] += self.grads[off + i];
                    }
                }
                Op::Sub { a, b } => {
                    let aoff = self.nodes[a.0].off;
                    let boff = self.nodes[b.0].off;
                    for i in 0..len {
                        self.grads[aoff + i] += self.grads[off + i];
                        self.grads[boff + i] -= self.grads[off + i];
                    }
                }
                Op::Mul { a, b } => {
                    let aoff = self.nodes[a.0].off;
                    let boff = self.nodes[b.0].off;
                    for i in 0..len {
                        let g = self.grads[off + i];
                        self.grads[aoff + i] += g * self.vals[boff + i];
                        self.grads[boff + i] += g * self.vals[aoff + i];
                    }
                }
                Op::AddConst { x } => {
                    let xoff = self.nodes[x.0].off;
                    for i in 0..len {
                        self.grads[xoff + i] += self.grads[off + i];
                    }
                }
                Op::Scale { x, c } => {
                    let xoff = self.nodes[x.0].off;
                    for i in 0..len {
                        self.grads[xoff + i] += c * self.grads[off + i];
                    }
                }
                Op::Slice { x, start } => {
                    let xoff = self.nodes[x.0].off;
                    for i in 0..len {
                        self.grads[xoff + start + i] += self.grads[off + i];
                    }
                }
                Op::SelectRow { x, row } => {
                    let xn = &self.nodes[x.0];
                    let xoff = xn.off + row * xn.cols;
                    for i in 0..len {
                        self.grads[xoff + i] += self.grads[off + i];
                    }
                }
                Op::SelectScalar { x, index } => {
                    let xoff = self.nodes[x.0].off;
                    self.grads[xoff + index] += self.grads[off];
                }
                Op::LogSumExp { x } => {
                    let g = self.grads[off];
                    if g != 0.0 {
                        let xn = &self.nodes[x.0];
                        let (xoff, xlen) = (xn.off, xn.len);
                        let out = self.vals[off];
                        // d/dx_i = softmax_i = exp(x_i - logsumexp)
                        for i in 0..xlen {
                            self.grads[xoff + i] += g * (self.vals[xoff + i] - out).exp();
                        }
                    }
                }
                Op::SumScalars { xs } => {
                    let g = self.grads[off];
                    for x in xs.iter() {
                        self.grads[self.nodes[x.0].off] += g;
                    }
                }
                Op::CustomScalar { xs, local } => {
                    let g = self.grads[off];
                    for (x, l) in xs.iter().zip(local.iter()) {
                        self.grads[self.nodes[x.0].off] += g * l;
                    }
                }
            }
        }
    }
}

/// LSTM cell parameters: fused gate weights over the input and the
/// recurrent state, gate order (input, forget, cell, output).
#[derive(Clone, Copy, Debug)]
pub struct LstmParams {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
}

/// Recurrent state nodes of one LSTM thread.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: NodeId,
    pub c: NodeId,
}

/// Registers the parameters of one LSTM cell under `prefix`.
pub fn lstm_cell_params(
    params: &mut ParamSet,
    prefix: &str,
    input_dim: usize,
    hidden_dim: usize,
    rng: &mut ChaCha8Rng,
) -> LstmParams {
    LstmParams {
        wx: params.add(&format!("{prefix}.wx"), glorot(4 * hidden_dim, input_dim, rng)),
        wh: params.add(&format!("{prefix}.wh"), glorot(4 * hidden_dim, hidden_dim, rng)),
        b: params.add(&format!("{prefix}.b"), Tensor::zeros(vec![4 * hidden_dim])),
    }
}

/// One LSTM step: gates from the fused affine maps, then the standard
/// cell/state update.
pub fn lstm_step(
    tape: &mut Tape,
    params: &ParamSet,
    cell: &LstmParams,
    x: NodeId,
    state: &LstmState,
) -> LstmState {
    let hidden = params.get(cell.wh).cols();
    let zx = tape.affine(params, cell.wx, x, Some(cell.b));
    let zh = tape.affine(params, cell.wh, state.h, None);
    let z = tape.add(zx, zh);
    let i_gate = {
        let s = tape.slice(z, 0, hidden);
        tape.sigmoid(s)
    };
    let f_gate = {
        let s = tape.slice(z, hidden, hidden);
        tape.sigmoid(s)
    };
    let g_cell = {
        let s = tape.slice(z, 2 * hidden, hidden);
        tape.tanh(s)
    };
    let o_gate = {
        let s = tape.slice(z, 3 * hidden, hidden);
        tape.sigmoid(s)
    };
    let fc = tape.mul(f_gate, state.c);
    let ig = tape.mul(i_gate, g_cell);
    let c_next = tape.add(fc, ig);
    let c_act = tape.tanh(c_next);
    let h_next = tape.mul(o_gate, c_act);
    LstmState {
        h: h_next,
        c: c_next,
    }
}

/// Uniform(-a, a) matrix with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Tensor::new(vec![rows, cols], data)
}

/// Uniform(-0.1, 0.1) embedding table.
pub fn embedding_table(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-0.1..0.1)).collect();
    Tensor::new(vec![rows, cols], data)
}
