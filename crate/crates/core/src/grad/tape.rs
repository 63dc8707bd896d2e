//! Tape-based reverse-mode differentiation.
//!
//! Every differentiable call appends one node holding its output value and
//! enough context to run the matching backward kernel. [`backward`] walks
//! the nodes from the loss towards the leaves in exact reverse order.
//!
//! Parameters are borrowed from their [`ParamSet`] for the lifetime of the
//! tape, so building a graph never copies weights.

use std::collections::BTreeMap;

use rand::Rng;

use super::ops::{self, Mode};
use super::{ParamSet, Tensor};
use crate::error::{shape_err, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Value<'a> {
    Owned(Tensor),
    Borrowed(&'a Tensor),
}

impl Value<'_> {
    fn get(&self) -> &Tensor {
        match self {
            Value::Owned(t) => t,
            Value::Borrowed(t) => t,
        }
    }
}

enum Op<'a> {
    Leaf,
    Conv1d {
        input: Var,
        kernels: Var,
        bias: Var,
        padding: usize,
    },
    MaxPool1d {
        input: Var,
        argmax: Vec<usize>,
    },
    Dense {
        input: Var,
        weights: Var,
        bias: Var,
    },
    Relu {
        input: Var,
    },
    Dropout {
        input: Var,
        mask: Option<Vec<f64>>,
    },
    Reshape {
        input: Var,
    },
    GradReverse {
        input: Var,
        factor: f64,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        probs: Tensor,
        targets: Value<'a>,
    },
    Contract {
        input: Var,
        weights: Tensor,
    },
    LinComb {
        terms: Vec<(Var, f64)>,
    },
}

impl Op<'_> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Conv1d { .. } => "conv1d",
            Op::MaxPool1d { .. } => "maxpool1d",
            Op::Dense { .. } => "dense",
            Op::Relu { .. } => "relu",
            Op::Dropout { .. } => "dropout",
            Op::Reshape { .. } => "reshape",
            Op::GradReverse { .. } => "grad_reverse",
            Op::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
            Op::Contract { .. } => "contract",
            Op::LinComb { .. } => "lincomb",
        }
    }
}

struct Node<'a> {
    value: Value<'a>,
    op: Op<'a>,
    needs_grad: bool,
}

/// Ordered record of executed operations.
#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

/// Tape variables for every parameter of one [`ParamSet`], keyed by id.
#[derive(Clone, Debug)]
pub struct BoundParams {
    vars: BTreeMap<String, Var>,
}

impl BoundParams {
    /// Bind ids to variables created elsewhere, e.g. by
    /// [`grad_check`](super::grad_check).
    pub fn from_vars(vars: impl IntoIterator<Item = (String, Var)>) -> Self {
        Self {
            vars: vars.into_iter().collect(),
        }
    }

    pub fn var(&self, id: &str) -> Result<Var> {
        self.vars
            .get(id)
            .copied()
            .ok_or_else(|| crate::Error::InvalidArgument(format!("no parameter `{id}` bound")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        self.nodes[v.0].value.get()
    }

    /// Names of the recorded operations in execution order.
    pub fn op_names(&self) -> Vec<&'static str> {
        self.nodes.iter().map(|n| n.op.name()).collect()
    }

    fn push(&mut self, value: Value<'a>, op: Op<'a>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Owned leaf that does not receive gradients (inputs, constants).
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Value::Owned(t), Op::Leaf, false)
    }

    /// Borrowed leaf that does not receive gradients.
    pub fn constant_ref(&mut self, t: &'a Tensor) -> Var {
        self.push(Value::Borrowed(t), Op::Leaf, false)
    }

    /// Borrowed leaf that receives gradients when `trainable`.
    pub fn param(&mut self, t: &'a Tensor, trainable: bool) -> Var {
        self.push(Value::Borrowed(t), Op::Leaf, trainable)
    }

    /// Bind every tensor of `set` as a parameter leaf.
    pub fn bind(&mut self, set: &'a ParamSet, trainable: bool) -> BoundParams {
        let vars = set
            .iter()
            .map(|(id, t)| (id.clone(), self.param(t, trainable)))
            .collect();
        BoundParams { vars }
    }

    pub fn conv1d(&mut self, input: Var, kernels: Var, bias: Var, padding: usize) -> Result<Var> {
        let out = ops::conv1d(
            self.value(input),
            self.value(kernels),
            self.value(bias),
            padding,
        )?;
        let needs = self.needs(input) || self.needs(kernels) || self.needs(bias);
        Ok(self.push(
            Value::Owned(out),
            Op::Conv1d {
                input,
                kernels,
                bias,
                padding,
            },
            needs,
        ))
    }

    pub fn maxpool1d(&mut self, input: Var, window: usize) -> Result<Var> {
        let (out, argmax) = ops::maxpool1d(self.value(input), window)?;
        let needs = self.needs(input);
        Ok(self.push(Value::Owned(out), Op::MaxPool1d { input, argmax }, needs))
    }

    pub fn dense(&mut self, input: Var, weights: Var, bias: Var) -> Result<Var> {
        let out = ops::dense(self.value(input), self.value(weights), self.value(bias))?;
        let needs = self.needs(input) || self.needs(weights) || self.needs(bias);
        Ok(self.push(
            Value::Owned(out),
            Op::Dense {
                input,
                weights,
                bias,
            },
            needs,
        ))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = ops::relu(self.value(input));
        let needs = self.needs(input);
        self.push(Value::Owned(out), Op::Relu { input }, needs)
    }

    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        input: Var,
        rate: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let (out, mask) = ops::dropout(self.value(input), rate, mode, rng)?;
        let needs = self.needs(input);
        Ok(self.push(Value::Owned(out), Op::Dropout { input, mask }, needs))
    }

    /// `[N, ...] -> [N, prod(...)]`.
    pub fn flatten(&mut self, input: Var) -> Result<Var> {
        let t = self.value(input);
        if t.rank() < 1 {
            return shape_err("flatten on a scalar");
        }
        let n = t.dim(0);
        let width = t.numel() / n.max(1);
        let out = t.clone().reshape(vec![n, width])?;
        let needs = self.needs(input);
        Ok(self.push(Value::Owned(out), Op::Reshape { input }, needs))
    }

    /// Identity forward; multiplies the incoming gradient by `−factor`.
    pub fn grad_reverse(&mut self, input: Var, factor: f64) -> Var {
        let out = self.value(input).clone();
        let needs = self.needs(input);
        self.push(Value::Owned(out), Op::GradReverse { input, factor }, needs)
    }

    /// Mean softmax cross-entropy. Returns the scalar loss node and the
    /// softmax probabilities.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        targets: &'a Tensor,
    ) -> Result<(Var, Tensor)> {
        let (loss, probs) = ops::softmax_cross_entropy(self.value(logits), targets)?;
        let needs = self.needs(logits);
        let var = self.push(
            Value::Owned(Tensor::scalar(loss)),
            Op::SoftmaxCrossEntropy {
                logits,
                probs: probs.clone(),
                targets: Value::Borrowed(targets),
            },
            needs,
        );
        Ok((var, probs))
    }

    /// Scalar `Σ input ⊙ weights`.
    pub fn contract(&mut self, input: Var, weights: Tensor) -> Result<Var> {
        let x = self.value(input);
        if x.shape() != weights.shape() {
            return shape_err(format!(
                "contract: {:?} vs {:?}",
                x.shape(),
                weights.shape()
            ));
        }
        let s = x
            .data()
            .iter()
            .zip(weights.data())
            .map(|(a, b)| a * b)
            .sum();
        let needs = self.needs(input);
        Ok(self.push(
            Value::Owned(Tensor::scalar(s)),
            Op::Contract { input, weights },
            needs,
        ))
    }

    /// Scalar `Σ coefficient · term`; every term must be a one-element node.
    pub fn lincomb(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let mut s = 0.0;
        for &(v, c) in terms {
            s += c * self.value(v).item()?;
        }
        let needs = terms.iter().any(|&(v, _)| self.needs(v));
        Ok(self.push(
            Value::Owned(Tensor::scalar(s)),
            Op::LinComb {
                terms: terms.to_vec(),
            },
            needs,
        ))
    }
}

/// Adjoints produced by [`backward`].
pub struct Gradients {
    adjoints: Vec<Option<Tensor>>,
    visited: Vec<usize>,
}

impl Gradients {
    /// Gradient for `v`, or `None` when `v` is not on a path to the loss or
    /// does not require gradients.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.adjoints.get(v.0).and_then(|a| a.as_ref())
    }

    /// Gradient for `v`, zeros when it did not receive one.
    pub fn wrt(&self, tape: &Tape<'_>, v: Var) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape()))
    }

    /// Move the gradients for a bound parameter set out, keyed like the
    /// set. Parameters without a gradient get zeros.
    pub fn collect(&mut self, tape: &Tape<'_>, bound: &BoundParams) -> BTreeMap<String, Tensor> {
        bound
            .iter()
            .map(|(id, &v)| {
                let g = self.adjoints[v.0]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape()));
                (id.clone(), g)
            })
            .collect()
    }

    /// Node indices whose backward rule ran, in the order they ran.
    pub fn visit_order(&self) -> &[usize] {
        &self.visited
    }
}

fn accumulate(adj: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut adj[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Reverse-mode sweep from the scalar `loss`.
pub fn backward(tape: &Tape<'_>, loss: Var) -> Result<Gradients> {
    let loss_value = tape.value(loss);
    if loss_value.numel() != 1 {
        return shape_err(format!(
            "backward from non-scalar of shape {:?}",
            loss_value.shape()
        ));
    }
    let mut adj: Vec<Option<Tensor>> = vec![None; tape.len()];
    let mut visited = Vec::new();
    adj[loss.0] = Some(Tensor::full(loss_value.shape(), 1.0));

    for i in (0..=loss.0).rev() {
        let node = &tape.nodes[i];
        if !node.needs_grad {
            continue;
        }
        let Some(g) = adj[i].take() else { continue };
        visited.push(i);
        let needs = |v: Var| tape.nodes[v.0].needs_grad;
        match &node.op {
            Op::Leaf => {
                adj[i] = Some(g);
            }
            Op::Conv1d {
                input,
                kernels,
                bias,
                padding,
            } => {
                let want = [needs(*input), needs(*kernels), needs(*bias)];
                let [dx, dk, db] = ops::conv1d_backward(
                    tape.value(*input),
                    tape.value(*kernels),
                    tape.value(*bias),
                    *padding,
                    &g,
                    want,
                )?;
                for (v, d) in [(*input, dx), (*kernels, dk), (*bias, db)] {
                    if let Some(d) = d {
                        accumulate(&mut adj, v, d);
                    }
                }
            }
            Op::MaxPool1d { input, argmax } => {
                let dx = ops::maxpool1d_backward(tape.value(*input).shape(), argmax, &g)?;
                accumulate(&mut adj, *input, dx);
            }
            Op::Dense {
                input,
                weights,
                bias,
            } => {
                let want = [needs(*input), needs(*weights), needs(*bias)];
                let [dx, dw, db] = ops::dense_backward(
                    tape.value(*input),
                    tape.value(*weights),
                    tape.value(*bias),
                    &g,
                    want,
                )?;
                for (v, d) in [(*input, dx), (*weights, dw), (*bias, db)] {
                    if let Some(d) = d {
                        accumulate(&mut adj, v, d);
                    }
                }
            }
            Op::Relu { input } => {
                accumulate(&mut adj, *input, ops::relu_backward(tape.value(*input), &g));
            }
            Op::Dropout { input, mask } => {
                let dx = match mask {
                    Some(mask) => {
                        let data = g.data().iter().zip(mask).map(|(a, m)| a * m).collect();
                        Tensor::new(g.shape().to_vec(), data)?
                    }
                    None => g,
                };
                accumulate(&mut adj, *input, dx);
            }
            Op::Reshape { input } => {
                let shape = tape.value(*input).shape().to_vec();
                accumulate(&mut adj, *input, g.reshape(shape)?);
            }
            Op::GradReverse { input, factor } => {
                accumulate(&mut adj, *input, g.scaled(-factor));
            }
            Op::SoftmaxCrossEntropy {
                logits,
                probs,
                targets,
            } => {
                let d = ops::softmax_cross_entropy_backward(probs, targets.get(), g.item()?);
                accumulate(&mut adj, *logits, d);
            }
            Op::Contract { input, weights } => {
                accumulate(&mut adj, *input, weights.scaled(g.item()?));
            }
            Op::LinComb { terms } => {
                let gv = g.item()?;
                for &(v, c) in terms {
                    if needs(v) {
                        let shape = tape.value(v).shape().to_vec();
                        accumulate(&mut adj, v, Tensor::full(&shape, c * gv));
                    }
                }
            }
        }
    }
    Ok(Gradients {
        adjoints: adj,
        visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_chain_gradient_equals_input() {
        // loss = sum(W·x) with W: [1,3]; dloss/dW = x.
        let w = Tensor::new(vec![1, 3], vec![0.5, -1.0, 2.0]).unwrap();
        let b = Tensor::zeros(&[1]);
        let x = Tensor::new(vec![1, 3], vec![3.0, 4.0, -5.0]).unwrap();
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let wv = tape.param(&w, true);
        let bv = tape.param(&b, true);
        let y = tape.dense(xv, wv, bv).unwrap();
        let loss = tape.contract(y, Tensor::full(&[1, 1], 1.0)).unwrap();
        let grads = backward(&tape, loss).unwrap();
        assert_eq!(grads.get(wv).unwrap().data(), x.data());
        assert_eq!(grads.get(bv).unwrap().data(), &[1.0]);
        assert!(grads.get(xv).is_none());
    }

    #[test]
    fn unused_parameter_gets_zero_gradient() {
        let used = Tensor::from_vec(vec![1.0, 2.0]);
        let unused = Tensor::from_vec(vec![9.0]);
        let mut tape = Tape::new();
        let u = tape.param(&used, true);
        let n = tape.param(&unused, true);
        let loss = tape.contract(u, Tensor::from_vec(vec![1.0, 1.0])).unwrap();
        let grads = backward(&tape, loss).unwrap();
        assert!(grads.get(n).is_none());
        assert_eq!(grads.wrt(&tape, n).data(), &[0.0]);
    }

    #[test]
    fn rejects_non_scalar_loss() {
        let p = Tensor::from_vec(vec![1.0, 2.0]);
        let mut tape = Tape::new();
        let v = tape.param(&p, true);
        let r = tape.relu(v);
        assert!(matches!(backward(&tape, r), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn backward_visits_in_reverse_execution_order() {
        let w = Tensor::new(vec![2, 2], vec![1.0, -0.5, 0.25, 2.0]).unwrap();
        let b = Tensor::from_vec(vec![0.1, -0.2]);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap());
        let wv = tape.param(&w, true);
        let bv = tape.param(&b, true);
        let h = tape.dense(x, wv, bv).unwrap();
        let r = tape.relu(h);
        let h2 = tape.dense(r, wv, bv).unwrap();
        let loss = tape.contract(h2, Tensor::full(&[1, 2], 1.0)).unwrap();
        let grads = backward(&tape, loss).unwrap();
        let order = grads.visit_order();
        assert!(order.windows(2).all(|p| p[0] > p[1]), "{order:?}");
        assert_eq!(order.first(), Some(&loss.index()));
        assert_eq!(
            tape.op_names(),
            ["leaf", "leaf", "leaf", "dense", "relu", "dense", "contract"]
        );
    }

    #[test]
    fn grad_reverse_negates_and_scales() {
        let p = Tensor::from_vec(vec![1.0, 2.0]);
        let mut tape = Tape::new();
        let v = tape.param(&p, true);
        let r = tape.grad_reverse(v, 0.5);
        assert_eq!(tape.value(r), &p);
        let loss = tape.contract(r, Tensor::from_vec(vec![2.0, 4.0])).unwrap();
        let grads = backward(&tape, loss).unwrap();
        assert_eq!(grads.get(v).unwrap().data(), &[-1.0, -2.0]);
    }

    #[test]
    fn relu_sum_gradient() {
        let p = Tensor::from_vec(vec![-1.0, 2.0]);
        let mut tape = Tape::new();
        let v = tape.param(&p, true);
        let r = tape.relu(v);
        let loss = tape.contract(r, Tensor::from_vec(vec![1.0, 1.0])).unwrap();
        let grads = backward(&tape, loss).unwrap();
        assert_eq!(grads.get(v).unwrap().data(), &[0.0, 1.0]);
    }
}
