//! Reverse-mode gradient tape.
//!
//! A forward pass appends nodes; each node holds its value and, after
//! [`Tape::backward`], its gradient. Nodes may only reference earlier nodes,
//! so a reverse sweep over the construction order is a valid topological
//! order. Parameter leaves are registered by name; their gradients accumulate
//! additively in a per-name map across backward calls until
//! [`Tape::clear_grads`] is called. Constant leaves ([`Tape::input`]) receive
//! local gradients but never export them, which is how frozen parameters are
//! kept out of the result.

use std::collections::BTreeMap;

use super::{softmax_unchecked, Matrix, NumError};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    /// Constant leaf, gradient not exported.
    Input,
    /// Named parameter leaf; gradient exported under the name index.
    Param(usize),
    /// Row `row` of a matrix leaf, as a column vector.
    Gather { src: NodeId, row: usize },
    /// Matrix–vector product.
    MatVec { w: NodeId, x: NodeId },
    Add { a: NodeId, b: NodeId },
    /// Element-wise product.
    Mul { a: NodeId, b: NodeId },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    Relu { x: NodeId },
    Softmax { x: NodeId },
    /// `[a; b]` stacked as one column vector.
    Concat { a: NodeId, b: NodeId },
    /// Contiguous sub-vector `x[offset .. offset+len]`.
    Slice { x: NodeId, offset: usize },
    /// Scalar `−ln(max(x[index], floor))`.
    NegLogPick { x: NodeId, index: usize, floor: f64 },
    /// `c · x` for a constant c.
    Scale { x: NodeId, c: f64 },
    /// Scalar Σ x².
    SumSq { x: NodeId },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    grad: Vec<f64>,
}

/// Forward recorder and reverse-mode differentiator.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_names: Vec<String>,
    grads: BTreeMap<String, Matrix>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize, value: Vec<f64>) -> NodeId {
        debug_assert_eq!(value.len(), rows * cols);
        let grad = vec![0.0; value.len()];
        self.nodes.push(Node { op, rows, cols, value, grad });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.node(id).value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.node(id).value.len(), 1);
        self.node(id).value[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant column-vector leaf.
    pub fn input_vec(&mut self, data: &[f64]) -> NodeId {
        self.push(Op::Input, data.len(), 1, data.to_vec())
    }

    /// Constant matrix leaf.
    pub fn input_matrix(&mut self, m: &Matrix) -> NodeId {
        self.push(Op::Input, m.rows(), m.cols(), m.data().to_vec())
    }

    /// Trainable parameter leaf. Values are snapshotted; the owning set can be
    /// mutated freely afterwards. Registering the same name twice is allowed
    /// and the exported gradients add up.
    pub fn param(&mut self, name: &str, m: &Matrix) -> NodeId {
        let idx = self.param_names.len();
        self.param_names.push(name.to_string());
        self.push(Op::Param(idx), m.rows(), m.cols(), m.data().to_vec())
    }

    /// Row `row` of a matrix leaf as a column vector (embedding lookup).
    pub fn gather(&mut self, src: NodeId, row: usize) -> Result<NodeId, NumError> {
        let s = self.node(src);
        if row >= s.rows {
            return Err(NumError::IndexOutOfRange {
                op: "gather",
                index: row,
                size: s.rows,
            });
        }
        let cols = s.cols;
        let value = s.value[row * cols..(row + 1) * cols].to_vec();
        Ok(self.push(Op::Gather { src, row }, cols, 1, value))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId, NumError> {
        let (wr, wc) = (self.node(w).rows, self.node(w).cols);
        let xr = self.node(x).rows;
        if wc != xr || self.node(x).cols != 1 {
            return Err(NumError::DimMismatch {
                op: "matvec",
                lhs: format!("W {}x{}", wr, wc),
                rhs: format!("x {}x{}", xr, self.node(x).cols),
            });
        }
        let mut out = Vec::with_capacity(wr);
        for i in 0..wr {
            let row = &self.node(w).value[i * wc..(i + 1) * wc];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(&self.node(x).value) {
                acc += a * b;
            }
            out.push(acc);
        }
        Ok(self.push(Op::MatVec { w, x }, wr, 1, out))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        self.check_same_shape("add", a, b)?;
        let value: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x + y)
            .collect();
        let (r, c) = (self.node(a).rows, self.node(a).cols);
        Ok(self.push(Op::Add { a, b }, r, c, value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        self.check_same_shape("mul", a, b)?;
        let value: Vec<f64> = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x * y)
            .collect();
        let (r, c) = (self.node(a).rows, self.node(a).cols);
        Ok(self.push(Op::Mul { a, b }, r, c, value))
    }

    /// `W·x + b`; the recorded counterpart of [`super::affine_forward`].
    pub fn affine(&mut self, w: NodeId, x: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> = self
            .node(x)
            .value
            .iter()
            .map(|&v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let (r, c) = (self.node(x).rows, self.node(x).cols);
        self.push(Op::Sigmoid { x }, r, c, value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> = self.node(x).value.iter().map(|&v| v.tanh()).collect();
        let (r, c) = (self.node(x).rows, self.node(x).cols);
        self.push(Op::Tanh { x }, r, c, value)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> = self
            .node(x)
            .value
            .iter()
            .map(|&v| if v > 0.0 { v } else { 0.0 })
            .collect();
        let (r, c) = (self.node(x).rows, self.node(x).cols);
        self.push(Op::Relu { x }, r, c, value)
    }

    /// Max-shifted softmax over a column vector.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId, NumError> {
        if self.node(x).value.is_empty() {
            return Err(NumError::EmptyInput { op: "softmax" });
        }
        let value = softmax_unchecked(&self.node(x).value);
        let (r, c) = (self.node(x).rows, self.node(x).cols);
        Ok(self.push(Op::Softmax { x }, r, c, value))
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut value = self.node(a).value.clone();
        value.extend_from_slice(&self.node(b).value);
        let rows = value.len();
        self.push(Op::Concat { a, b }, rows, 1, value)
    }

    pub fn slice(&mut self, x: NodeId, offset: usize, len: usize) -> Result<NodeId, NumError> {
        let n = self.node(x).value.len();
        if offset + len > n {
            return Err(NumError::IndexOutOfRange {
                op: "slice",
                index: offset + len,
                size: n,
            });
        }
        let value = self.node(x).value[offset..offset + len].to_vec();
        Ok(self.push(Op::Slice { x, offset }, len, 1, value))
    }

    /// Scalar `−ln(max(x[index], floor))`. The floor keeps saturated
    /// probabilities from producing −∞; below the floor the gradient is zero.
    pub fn neg_log_pick(
        &mut self,
        x: NodeId,
        index: usize,
        floor: f64,
    ) -> Result<NodeId, NumError> {
        let n = self.node(x).value.len();
        if index >= n {
            return Err(NumError::IndexOutOfRange {
                op: "neg_log_pick",
                index,
                size: n,
            });
        }
        let p = self.node(x).value[index];
        let value = vec![-(p.max(floor)).ln()];
        Ok(self.push(Op::NegLogPick { x, index, floor }, 1, 1, value))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let value: Vec<f64> = self.node(x).value.iter().map(|v| c * v).collect();
        let (r, cl) = (self.node(x).rows, self.node(x).cols);
        self.push(Op::Scale { x, c }, r, cl, value)
    }

    /// Scalar Σ x² (the L2 term of a parameter leaf).
    pub fn sum_squares(&mut self, x: NodeId) -> NodeId {
        let value = vec![self.node(x).value.iter().map(|v| v * v).sum()];
        self.push(Op::SumSq { x }, 1, 1, value)
    }

    fn check_same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(), NumError> {
        let (na, nb) = (self.node(a), self.node(b));
        if na.rows != nb.rows || na.cols != nb.cols {
            return Err(NumError::DimMismatch {
                op,
                lhs: format!("{}x{}", na.rows, na.cols),
                rhs: format!("{}x{}", nb.rows, nb.cols),
            });
        }
        Ok(())
    }

    /// Reverse sweep from a scalar `loss` node. Afterwards every parameter
    /// registered on this tape has its gradient added into the accumulated
    /// per-name map.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), NumError> {
        if loss.0 >= self.nodes.len() {
            return Err(NumError::TapeState(format!(
                "backward before forward: node {} not on tape of length {}",
                loss.0,
                self.nodes.len()
            )));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(NumError::TapeState(
                "backward target must be a scalar node".to_string(),
            ));
        }
        for n in self.nodes.iter_mut() {
            n.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.nodes[loss.0].grad[0] = 1.0;

        for i in (0..=loss.0).rev() {
            // The node's own gradient is complete here: all consumers sit at
            // higher indices. Clone it out so inputs can be mutated.
            let grad = self.nodes[i].grad.clone();
            if grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            let op = self.nodes[i].op.clone();
            match op {
                Op::Input | Op::Param(_) => {}
                Op::Gather { src, row } => {
                    let cols = self.nodes[src.0].cols;
                    let dst = &mut self.nodes[src.0].grad[row * cols..(row + 1) * cols];
                    for (d, g) in dst.iter_mut().zip(&grad) {
                        *d += g;
                    }
                }
                Op::MatVec { w, x } => {
                    let xv = self.nodes[x.0].value.clone();
                    let wc = self.nodes[w.0].cols;
                    {
                        let wg = &mut self.nodes[w.0].grad;
                        for (r, g) in grad.iter().enumerate() {
                            let row = &mut wg[r * wc..(r + 1) * wc];
                            for (d, xvj) in row.iter_mut().zip(&xv) {
                                *d += g * xvj;
                            }
                        }
                    }
                    let wv = self.nodes[w.0].value.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for (r, g) in grad.iter().enumerate() {
                        let row = &wv[r * wc..(r + 1) * wc];
                        for (d, wvj) in xg.iter_mut().zip(row) {
                            *d += g * wvj;
                        }
                    }
                }
                Op::Add { a, b } => {
                    for (d, g) in self.nodes[a.0].grad.iter_mut().zip(&grad) {
                        *d += g;
                    }
                    for (d, g) in self.nodes[b.0].grad.iter_mut().zip(&grad) {
                        *d += g;
                    }
                }
                Op::Mul { a, b } => {
                    let av = self.nodes[a.0].value.clone();
                    let bv = self.nodes[b.0].value.clone();
                    for ((d, g), v) in self.nodes[a.0].grad.iter_mut().zip(&grad).zip(&bv) {
                        *d += g * v;
                    }
                    for ((d, g), v) in self.nodes[b.0].grad.iter_mut().zip(&grad).zip(&av) {
                        *d += g * v;
                    }
                }
                Op::Sigmoid { x } => {
                    let yv = self.nodes[i].value.clone();
                    for ((d, g), y) in self.nodes[x.0].grad.iter_mut().zip(&grad).zip(&yv) {
                        *d += g * y * (1.0 - y);
                    }
                }
                Op::Tanh { x } => {
                    let yv = self.nodes[i].value.clone();
                    for ((d, g), y) in self.nodes[x.0].grad.iter_mut().zip(&grad).zip(&yv) {
                        *d += g * (1.0 - y * y);
                    }
                }
                Op::Relu { x } => {
                    let xv = self.nodes[x.0].value.clone();
                    for ((d, g), v) in self.nodes[x.0].grad.iter_mut().zip(&grad).zip(&xv) {
                        if *v > 0.0 {
                            *d += g;
                        }
                    }
                }
                Op::Softmax { x } => {
                    let yv = self.nodes[i].value.clone();
                    let dot: f64 = grad.iter().zip(&yv).map(|(g, y)| g * y).sum();
                    for ((d, g), y) in self.nodes[x.0].grad.iter_mut().zip(&grad).zip(&yv) {
                        *d += y * (g - dot);
                    }
                }
                Op::Concat { a, b } => {
                    let na = self.nodes[a.0].value.len();
                    for (d, g) in self.nodes[a.0].grad.iter_mut().zip(&grad[..na]) {
                        *d += g;
                    }
                    for (d, g) in self.nodes[b.0].grad.iter_mut().zip(&grad[na..]) {
                        *d += g;
                    }
                }
                Op::Slice { x, offset } => {
                    let dst = &mut self.nodes[x.0].grad[offset..offset + grad.len()];
                    for (d, g) in dst.iter_mut().zip(&grad) {
                        *d += g;
                    }
                }
                Op::NegLogPick { x, index, floor } => {
                    let p = self.nodes[x.0].value[index];
                    if p > floor {
                        self.nodes[x.0].grad[index] += grad[0] * (-1.0 / p);
                    }
                }
                Op::Scale { x, c } => {
                    for (d, g) in self.nodes[x.0].grad.iter_mut().zip(&grad) {
                        *d += c * g;
                    }
                }
                Op::SumSq { x } => {
                    let xv = self.nodes[x.0].value.clone();
                    for (d, v) in self.nodes[x.0].grad.iter_mut().zip(&xv) {
                        *d += grad[0] * 2.0 * v;
                    }
                }
            }
        }

        // Export parameter gradients into the accumulated map.
        for n in &self.nodes {
            if let Op::Param(idx) = n.op {
                let name = &self.param_names[idx];
                let entry = self
                    .grads
                    .entry(name.clone())
                    .or_insert_with(|| Matrix::zeros(n.rows, n.cols));
                for (d, g) in entry.data_mut().iter_mut().zip(&n.grad) {
                    *d += g;
                }
            }
        }
        Ok(())
    }

    /// Accumulated gradient for `name`, if any backward pass touched it.
    pub fn grad(&self, name: &str) -> Option<&Matrix> {
        self.grads.get(name)
    }

    /// Accumulated gradients shaped like `params`; parameters never recorded
    /// (e.g. an empty tape, or frozen tensors) come back as zeros.
    pub fn grads_for(&self, params: &ParamShapes) -> ParamGrads {
        let mut out = BTreeMap::new();
        for (name, (rows, cols)) in &params.0 {
            let g = self
                .grads
                .get(name)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(*rows, *cols));
            out.insert(name.clone(), g);
        }
        ParamGrads(out)
    }

    /// Drops recorded nodes but keeps accumulated gradients, so several
    /// forward/backward passes can share one Adam step.
    pub fn clear_nodes(&mut self) {
        self.nodes.clear();
        self.param_names.clear();
    }

    pub fn clear_grads(&mut self) {
        self.grads.clear();
    }

    /// Accumulated gradients, leaving the tape's map empty.
    pub fn take_grads(&mut self) -> BTreeMap<String, Matrix> {
        std::mem::take(&mut self.grads)
    }
}

/// Shape catalogue of a parameter set, for zero-filling missing gradients.
pub struct ParamShapes(BTreeMap<String, (usize, usize)>);

impl ParamShapes {
    pub fn of(params: &super::ParamSet) -> Self {
        ParamShapes(
            params
                .iter()
                .map(|(n, m)| (n.to_string(), (m.rows(), m.cols())))
                .collect(),
        )
    }
}

/// Gradients keyed by parameter name.
pub struct ParamGrads(pub BTreeMap<String, Matrix>);
