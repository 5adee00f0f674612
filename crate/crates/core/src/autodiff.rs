//! Tape-based reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! Operations are appended to a [`Tape`] during the forward pass; node
//! handles are plain indices, so inputs always precede outputs and a single
//! reverse sweep applies the chain rule. Gradients are reset at the start of
//! every `backward` call, so repeated calls on the same graph are
//! bit-identical.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    Activation(ActivationKind, NodeId),
    /// Mean squared error between two same-shaped tensors; output is 1x1.
    Mse(NodeId, NodeId),
    Sum(NodeId),
    Scale(NodeId, f64),
    SliceCols(NodeId, usize, usize),
    ConcatCols(NodeId, NodeId),
    /// Expand a 1 x n(n+1)/2 row of upper-triangle entries into a symmetric
    /// n x n matrix. Symmetry of the output is structural.
    MirrorUpper(NodeId, usize),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    grad: Tensor,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Length of the packed upper triangle of an n x n symmetric matrix.
pub fn upper_triangle_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packed index of entry (i, j) with i <= j in row-major upper-triangle order.
pub fn upper_triangle_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
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

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last `backward` loss w.r.t. this node.
    pub fn grad(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].grad
    }

    fn push(&mut self, op: Op, value: Tensor) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: "tape op" });
        }
        let grad = Tensor::zeros(value.rows(), value.cols());
        self.nodes.push(Node { op, value, grad });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Insert an input tensor. Leaves hold parameters, inputs and constants
    /// alike; training code decides which gradients it reads.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        let grad = Tensor::zeros(value.rows(), value.cols());
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
            grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.matmul(&self.nodes[b.0].value)?;
        self.push(Op::Matmul(a, b), value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.add(&self.nodes[b.0].value)?;
        self.push(Op::Add(a, b), value)
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.hadamard(&self.nodes[b.0].value)?;
        self.push(Op::Hadamard(a, b), value)
    }

    pub fn activation(&mut self, kind: ActivationKind, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.map(|v| kind.apply(v));
        self.push(Op::Activation(kind, x), value)
    }

    /// Mean of squared entrywise differences; the result is a 1x1 tensor.
    pub fn mse(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let p = &self.nodes[pred.0].value;
        let t = &self.nodes[target.0].value;
        if p.shape() != t.shape() {
            return Err(Error::ShapeMismatch {
                op: "mse",
                lhs_rows: p.rows(),
                lhs_cols: p.cols(),
                rhs_rows: t.rows(),
                rhs_cols: t.cols(),
            });
        }
        let mut acc = 0.0;
        for (a, b) in p.data().iter().zip(t.data()) {
            let d = a - b;
            acc += d * d;
        }
        let value = Tensor::new(1, 1, vec![acc / p.len() as f64])?;
        self.push(Op::Mse(pred, target), value)
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let value = Tensor::new(1, 1, vec![self.nodes[x.0].value.sum()])?;
        self.push(Op::Sum(x), value)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let value = self.nodes[x.0].value.scale(c);
        self.push(Op::Scale(x, c), value)
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let value = self.nodes[x.0].value.slice_cols(start, len)?;
        self.push(Op::SliceCols(x, start, len), value)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.concat_cols(&self.nodes[b.0].value)?;
        self.push(Op::ConcatCols(a, b), value)
    }

    /// Mirror a packed upper triangle (1 x n(n+1)/2 row) into a symmetric
    /// n x n matrix.
    pub fn mirror_upper(&mut self, theta: NodeId, n: usize) -> Result<NodeId> {
        let t = &self.nodes[theta.0].value;
        let expect = upper_triangle_len(n);
        if t.rows() != 1 || t.cols() != expect {
            return Err(Error::Contract(format!(
                "mirror_upper expects a 1x{expect} row for n={n}, got {}x{}",
                t.rows(),
                t.cols()
            )));
        }
        let mut value = Tensor::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = t.get(0, upper_triangle_index(i, j, n));
                value.set(i, j, v);
                value.set(j, i, v);
            }
        }
        self.push(Op::MirrorUpper(theta, n), value)
    }

    /// Reverse sweep from a scalar loss. Resets all gradients first, then
    /// accumulates exact adjoints into every reachable node.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.nodes[loss.0].value.shape() != (1, 1) {
            let (r, c) = self.nodes[loss.0].value.shape();
            return Err(Error::Contract(format!(
                "backward expects a 1x1 loss, got {r}x{c}"
            )));
        }
        for node in &mut self.nodes {
            node.grad = Tensor::zeros(node.value.rows(), node.value.cols());
        }
        self.nodes[loss.0].grad.set(0, 0, 1.0);

        for idx in (0..=loss.0).rev() {
            let op = self.nodes[idx].op.clone();
            let grad = self.nodes[idx].grad.clone();
            match op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let da = grad.matmul(&self.nodes[b.0].value.transpose())?;
                    let db = self.nodes[a.0].value.transpose().matmul(&grad)?;
                    self.accumulate(a, &da)?;
                    self.accumulate(b, &db)?;
                }
                Op::Add(a, b) => {
                    self.accumulate(a, &grad)?;
                    self.accumulate(b, &grad)?;
                }
                Op::Hadamard(a, b) => {
                    let da = grad.hadamard(&self.nodes[b.0].value)?;
                    let db = grad.hadamard(&self.nodes[a.0].value)?;
                    self.accumulate(a, &da)?;
                    self.accumulate(b, &db)?;
                }
                Op::Activation(kind, x) => {
                    let input = &self.nodes[x.0].value;
                    let mut dx = Tensor::zeros(input.rows(), input.cols());
                    for (d, (g, v)) in dx
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data().iter().zip(input.data()))
                    {
                        *d = g * kind.derivative(*v);
                    }
                    self.accumulate(x, &dx)?;
                }
                Op::Mse(pred, target) => {
                    let g = grad.get(0, 0);
                    let p = &self.nodes[pred.0].value;
                    let t = &self.nodes[target.0].value;
                    let k = p.len() as f64;
                    let dp = p.sub(t)?.scale(2.0 * g / k);
                    let dt = dp.scale(-1.0);
                    self.accumulate(pred, &dp)?;
                    self.accumulate(target, &dt)?;
                }
                Op::Sum(x) => {
                    let g = grad.get(0, 0);
                    let shape = self.nodes[x.0].value.shape();
                    let dx = Tensor::filled(shape.0, shape.1, g);
                    self.accumulate(x, &dx)?;
                }
                Op::Scale(x, c) => {
                    self.accumulate(x, &grad.scale(c))?;
                }
                Op::SliceCols(x, start, len) => {
                    let shape = self.nodes[x.0].value.shape();
                    let mut dx = Tensor::zeros(shape.0, shape.1);
                    for i in 0..shape.0 {
                        for j in 0..len {
                            dx.set(i, start + j, grad.get(i, j));
                        }
                    }
                    self.accumulate(x, &dx)?;
                }
                Op::ConcatCols(a, b) => {
                    let a_cols = self.nodes[a.0].value.cols();
                    let b_cols = self.nodes[b.0].value.cols();
                    let da = grad.slice_cols(0, a_cols)?;
                    let db = grad.slice_cols(a_cols, b_cols)?;
                    self.accumulate(a, &da)?;
                    self.accumulate(b, &db)?;
                }
                Op::MirrorUpper(theta, n) => {
                    let mut dt = Tensor::zeros(1, upper_triangle_len(n));
                    for i in 0..n {
                        for j in i..n {
                            let k = upper_triangle_index(i, j, n);
                            let mut v = grad.get(i, j);
                            if i != j {
                                v += grad.get(j, i);
                            }
                            let prev = dt.get(0, k);
                            dt.set(0, k, prev + v);
                        }
                    }
                    self.accumulate(theta, &dt)?;
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, id: NodeId, delta: &Tensor) -> Result<()> {
        let node = &mut self.nodes[id.0];
        node.grad = node.grad.add(delta)?;
        Ok(())
    }
}

/// Central-difference gradient of a scalar function of several tensors.
///
/// This is the independent oracle the gradient tests check the tape against;
/// it never touches the tape.
pub fn finite_diff_grad<F>(f: F, params: &[Tensor], eps: f64) -> Result<Vec<Tensor>>
where
    F: Fn(&[Tensor]) -> Result<f64>,
{
    if eps <= 0.0 {
        return Err(Error::Contract("finite_diff_grad requires eps > 0".into()));
    }
    let mut work: Vec<Tensor> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let mut grad = Tensor::zeros(params[p].rows(), params[p].cols());
        for idx in 0..params[p].len() {
            let orig = work[p].data()[idx];
            work[p].data_mut()[idx] = orig + eps;
            let plus = f(&work)?;
            work[p].data_mut()[idx] = orig - eps;
            let minus = f(&work)?;
            work[p].data_mut()[idx] = orig;
            grad.data_mut()[idx] = (plus - minus) / (2.0 * eps);
        }
        grads.push(grad);
    }
    Ok(grads)
}
