//! Dense layers and the forward record used to backpropagate through them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::ops::{self, Activation};
use super::optim::ParamTensors;
use crate::error::{Error, Result};

/// One affine map followed by an elementwise activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `fan_in x fan_out`.
    pub weights: Matrix,
    /// `1 x fan_out`.
    pub bias: Matrix,
    pub activation: Activation,
}

impl Dense {
    /// Glorot-uniform weights in `[-a, a]` with `a = sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng>(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut R) -> Self {
        let a = glorot_bound(fan_in, fan_out);
        let weights = Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-a..=a));
        Dense {
            weights,
            bias: Matrix::zeros(1, fan_out),
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    /// Returns `(pre_activation, output)`.
    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, Matrix)> {
        let pre = ops::affine(input, &self.weights, self.bias.as_slice())?;
        let out = ops::activation(&pre, self.activation);
        Ok((pre, out))
    }

    pub(crate) fn zeros_like(&self) -> Dense {
        Dense {
            weights: Matrix::zeros(self.weights.rows(), self.weights.cols()),
            bias: Matrix::zeros(1, self.bias.cols()),
            activation: self.activation,
        }
    }
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl ParamTensors for Vec<Dense> {
    fn tensors(&self) -> Vec<&Matrix> {
        self.iter().flat_map(|l| [&l.weights, &l.bias]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct TapeStep {
    pub input: Matrix,
    pub pre: Matrix,
    pub output: Matrix,
}

/// Ordered record of every affine + activation step of one forward pass.
#[derive(Clone, Debug, Default)]
pub struct GradientTape {
    steps: Vec<TapeStep>,
}

impl GradientTape {
    /// Runs `layers` in order on `input`, recording each step.
    pub fn record(layers: &[Dense], input: &Matrix) -> Result<Self> {
        let mut steps = Vec::with_capacity(layers.len());
        let mut current = input.clone();
        for layer in layers {
            let (pre, output) = layer.forward(&current)?;
            steps.push(TapeStep {
                input: current,
                pre,
                output: output.clone(),
            });
            current = output;
        }
        Ok(GradientTape { steps })
    }

    pub fn steps(&self) -> &[TapeStep] {
        &self.steps
    }

    /// Output of layer `i`.
    pub fn layer_output(&self, i: usize) -> &Matrix {
        &self.steps[i].output
    }

    /// Output of the last layer; `None` when no layers were recorded.
    pub fn output(&self) -> Option<&Matrix> {
        self.steps.last().map(|s| &s.output)
    }

    /// Recomputes the forward pass from the recorded first input.
    pub fn replay(&self, layers: &[Dense]) -> Result<Matrix> {
        let first = self
            .steps
            .first()
            .ok_or_else(|| Error::invalid("cannot replay an empty tape"))?;
        let mut current = first.input.clone();
        for layer in layers {
            current = layer.forward(&current)?.1;
        }
        Ok(current)
    }

    /// Backpropagates `d_output` (gradient w.r.t. the last layer's output).
    ///
    /// `injected[i]`, when present, is an extra gradient w.r.t. the output of
    /// layer `i` coming from outside this stack. Returns per-layer parameter
    /// gradients and, if requested, the gradient w.r.t. the stack input.
    pub fn backward(
        &self,
        layers: &[Dense],
        d_output: Matrix,
        injected: &[Option<&Matrix>],
        want_input_grad: bool,
    ) -> Result<(Vec<Dense>, Option<Matrix>)> {
        if layers.len() != self.steps.len() {
            return Err(Error::shape(
                "GradientTape::backward",
                format!("{} layers for {} recorded steps", layers.len(), self.steps.len()),
            ));
        }
        let mut grads: Vec<Dense> = layers.iter().map(Dense::zeros_like).collect();
        let mut d_out = d_output;
        for (idx, (layer, step)) in layers.iter().zip(&self.steps).enumerate().rev() {
            if let Some(Some(extra)) = injected.get(idx) {
                d_out.axpy(1.0, extra)?;
            }
            // dL/dpre = dL/dout * act'(pre)
            let mut d_pre = d_out;
            for ((g, &p), &o) in d_pre
                .as_mut_slice()
                .iter_mut()
                .zip(step.pre.as_slice())
                .zip(step.output.as_slice())
            {
                *g *= layer.activation.derivative(p, o);
            }
            grads[idx].weights = ops::t_matmul(&step.input, &d_pre)?;
            grads[idx].bias = Matrix::row_vector(&d_pre.column_sums());
            if idx == 0 && !want_input_grad {
                return Ok((grads, None));
            }
            d_out = ops::matmul_t(&d_pre, &layer.weights)?;
        }
        Ok((grads, Some(d_out)))
    }
}
