//! Reverse-mode differentiation over [`Tensor`] values.
//!
//! A [`Tape`] records primitive operations as they are evaluated. Every
//! node refers only to nodes recorded before it, so the node list is a
//! topological order and [`Tape::backward`] is a single reverse sweep.
//!
//! Leaves are either parameters ([`Tape::param`]), which receive gradients,
//! or constants ([`Tape::constant`]), which do not. Nodes that depend on no
//! parameter are skipped during the backward sweep.

mod adam;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{Init, Layer, LayerSpec, MlpNetwork, NetVars, Output};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{gemm, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu { slope: f64 },
    Tanh,
    Sigmoid,
}

impl Activation {
    pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu {
            slope: Self::DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow for large `|x|`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(sigmoid(x))`, finite for every finite `x`.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Tensor),
    Act(Var, Activation),
    LogSigmoid(Var),
    Softplus(Var),
    Mean(Var),
    Sum(Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf whose gradient is reported by [`Tape::backward`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, v: Var) -> Result<()> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::Contract(format!("variable {} is not on this tape", v.0)))
        }
    }

    fn grad_flag(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check(a)?;
        self.check(b)?;
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// Adds a length-`n` bias vector to every row of an `[m, n]` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        self.check(x)?;
        self.check(bias)?;
        let (xv, bv) = (self.value(x), self.value(bias));
        let n = xv.cols();
        if xv.ndim() != 2 || bv.len() != n {
            return Err(Error::dim(
                "add_bias",
                format!("{:?} + bias {:?}", xv.shape(), bv.shape()),
            ));
        }
        let mut out = xv.clone();
        for row in out.data_mut().chunks_mut(n.max(1)) {
            for (o, b) in row.iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        let rg = self.grad_flag(&[x, bias]);
        Ok(self.push(out, Op::AddBias(x, bias), rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::dim(
                op,
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let data = zip_with(self.value(a), self.value(b), |x, y| x + y);
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(data, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let data = zip_with(self.value(a), self.value(b), |x, y| x - y);
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(data, Op::Sub(a, b), rg))
    }

    /// Elementwise product of two same-shape nodes.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let data = zip_with(self.value(a), self.value(b), |x, y| x * y);
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(data, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.check(a)?;
        let value = self.value(a).map(|x| c * x);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Scale(a, c), rg))
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, a: Var, c: Tensor) -> Result<Var> {
        self.check(a)?;
        if self.value(a).shape() != c.shape() {
            return Err(Error::dim(
                "mul_const",
                format!("{:?} vs {:?}", self.value(a).shape(), c.shape()),
            ));
        }
        let value = zip_with(self.value(a), &c, |x, y| x * y);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::MulConst(a, c), rg))
    }

    pub fn activate(&mut self, a: Var, act: Activation) -> Result<Var> {
        self.check(a)?;
        let value = self.value(a).map(|x| act.apply(x));
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Act(a, act), rg))
    }

    pub fn log_sigmoid(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let value = self.value(a).map(log_sigmoid);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::LogSigmoid(a), rg))
    }

    /// `ln(1 - sigmoid(x)) = ln(sigmoid(-x))`.
    pub fn log_one_minus_sigmoid(&mut self, a: Var) -> Result<Var> {
        let neg = self.scale(a, -1.0)?;
        self.log_sigmoid(neg)
    }

    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let value = self.value(a).map(softplus);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Softplus(a), rg))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let t = self.value(a);
        if t.is_empty() {
            return Err(Error::Contract("mean of an empty tensor".into()));
        }
        let value = Tensor::scalar(t.mean());
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Mean(a), rg))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let value = Tensor::scalar(self.value(a).sum());
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Sum(a), rg))
    }

    /// `max(0, x)` elementwise.
    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.activate(a, Activation::Relu)
    }

    /// Gradient of the scalar `loss` with respect to every node.
    ///
    /// Accumulators are fresh on every call.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        self.check(loss)?;
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::new(lv.shape().to_vec(), vec![1.0])?);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            // Leaves keep their gradient; interior nodes consume theirs.
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                    if self.nodes[a.0].requires_grad {
                        let ga = gemm(g.data(), false, bv.data(), true, m, n, k);
                        accumulate(&mut grads, *a, Tensor::new(vec![m, k], ga)?);
                    }
                    if self.nodes[b.0].requires_grad {
                        let gb = gemm(av.data(), true, g.data(), false, k, m, n);
                        accumulate(&mut grads, *b, Tensor::new(vec![k, n], gb)?);
                    }
                }
                Op::AddBias(x, b) => {
                    if self.nodes[b.0].requires_grad {
                        let n = g.cols();
                        let mut gb = vec![0.0; n];
                        for row in g.iter_rows() {
                            for (acc, v) in gb.iter_mut().zip(row) {
                                *acc += v;
                            }
                        }
                        let shape = self.value(*b).shape().to_vec();
                        accumulate(&mut grads, *b, Tensor::new(shape, gb)?);
                    }
                    if self.nodes[x.0].requires_grad {
                        accumulate(&mut grads, *x, g);
                    }
                }
                Op::Add(a, b) => {
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut grads, *b, g.clone());
                    }
                    accumulate(&mut grads, *a, g);
                }
                Op::Sub(a, b) => {
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut grads, *b, g.map(|x| -x));
                    }
                    accumulate(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    if self.nodes[b.0].requires_grad {
                        let gb = zip_with(&g, self.value(*a), |x, y| x * y);
                        accumulate(&mut grads, *b, gb);
                    }
                    if self.nodes[a.0].requires_grad {
                        let ga = zip_with(&g, self.value(*b), |x, y| x * y);
                        accumulate(&mut grads, *a, ga);
                    }
                }
                Op::Scale(a, c) => accumulate(&mut grads, *a, g.map(|x| c * x)),
                Op::MulConst(a, c) => accumulate(&mut grads, *a, zip_with(&g, c, |x, y| x * y)),
                Op::Act(a, act) => {
                    let x = self.value(*a).data();
                    let y = node.value.data();
                    let data = g
                        .data()
                        .iter()
                        .zip(x.iter().zip(y))
                        .map(|(gi, (&xi, &yi))| gi * act.derivative(xi, yi))
                        .collect();
                    accumulate(&mut grads, *a, Tensor::new(g.shape().to_vec(), data)?);
                }
                Op::LogSigmoid(a) => {
                    // d/dx ln σ(x) = σ(-x)
                    let x = self.value(*a);
                    accumulate(&mut grads, *a, zip_with(&g, x, |gi, xi| gi * sigmoid(-xi)));
                }
                Op::Softplus(a) => {
                    let x = self.value(*a);
                    accumulate(&mut grads, *a, zip_with(&g, x, |gi, xi| gi * sigmoid(xi)));
                }
                Op::Mean(a) => {
                    let av = self.value(*a);
                    let gi = g.data()[0] / av.len() as f64;
                    accumulate(&mut grads, *a, Tensor::full(av.shape().to_vec(), gi));
                }
                Op::Sum(a) => {
                    let av = self.value(*a);
                    accumulate(&mut grads, *a, Tensor::full(av.shape().to_vec(), g.data()[0]));
                }
            }
        }
        for (node, g) in self.nodes.iter().zip(grads.iter_mut()) {
            if !node.requires_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }
}

fn zip_with(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("shapes checked by caller")
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => {
            for (a, x) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += x;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

/// Result of one backward sweep.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of a parameter leaf; `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of a parameter leaf, zeros when the loss does not reach it.
    pub fn wrt(&self, tape: &Tape, v: Var) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape().to_vec()))
    }
}
