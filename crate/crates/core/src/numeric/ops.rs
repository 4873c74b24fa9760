//! Layer primitives, losses and distribution helpers.

use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Trans};
use crate::error::{Error, Result};

/// Elementwise nonlinearity applied after an affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => sigmoid(v),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the pre-activation `pre` and output `out`.
    #[inline]
    pub fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" | "identity" => Ok(Activation::Linear),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `input * weights + bias`, with `bias` broadcast over rows.
pub fn affine(input: &Matrix, weights: &Matrix, bias: &[f64]) -> Result<Matrix> {
    if input.cols() != weights.rows() {
        return Err(Error::shape(
            "affine",
            format!(
                "input is {}x{} but weights are {}x{}",
                input.rows(),
                input.cols(),
                weights.rows(),
                weights.cols()
            ),
        ));
    }
    if bias.len() != weights.cols() {
        return Err(Error::shape(
            "affine",
            format!(
                "bias has {} entries, weights have {} columns",
                bias.len(),
                weights.cols()
            ),
        ));
    }
    let mut out = input.matmul(weights)?;
    out.add_row_broadcast(bias)?;
    Ok(out)
}

pub fn activation(input: &Matrix, kind: Activation) -> Matrix {
    input.map(|v| kind.apply(v))
}

/// `(1/N) * sum_i ||x_i - x_hat_i||^2`.
pub fn mse_reconstruction_loss(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::shape(
            "mse_reconstruction_loss",
            format!("{:?} vs {:?}", x.shape(), x_hat.shape()),
        ));
    }
    if x.rows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = x
        .as_slice()
        .iter()
        .zip(x_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / x.rows() as f64)
}

/// Gradient of [`mse_reconstruction_loss`] with respect to `x_hat`.
pub fn mse_reconstruction_grad(x: &Matrix, x_hat: &Matrix) -> Result<Matrix> {
    let n = x.rows().max(1) as f64;
    x_hat.zip_with(x, "mse_reconstruction_grad", |xh, xv| 2.0 * (xh - xv) / n)
}

/// Row-stochastic `N x K` matrix: entries nonnegative, rows summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftAssignments(Matrix);

pub const ROW_SUM_TOL: f64 = 1e-9;

impl SoftAssignments {
    /// Validates the row-stochastic invariant.
    pub fn new(m: Matrix) -> Result<Self> {
        for (i, row) in m.row_iter().enumerate() {
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(SoftAssignments(m))
    }

    /// Normalizes each row of a nonnegative matrix by its sum.
    pub(crate) fn from_unnormalized(mut m: Matrix) -> Self {
        for i in 0..m.rows() {
            let row = m.row_mut(i);
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        SoftAssignments(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn clusters(&self) -> usize {
        self.0.cols()
    }

    pub fn hard_labels(&self) -> Vec<usize> {
        self.0.argmax_rows()
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `sum_ij p_ij * ln(p_ij / q_ij)` with the `0 * ln 0 = 0` convention.
pub fn kl_divergence(p: &SoftAssignments, q: &SoftAssignments) -> Result<f64> {
    let (pm, qm) = (p.matrix(), q.matrix());
    if pm.shape() != qm.shape() {
        return Err(Error::shape(
            "kl_divergence",
            format!("{:?} vs {:?}", pm.shape(), qm.shape()),
        ));
    }
    let mut total = 0.0;
    for (idx, (&pv, &qv)) in pm.as_slice().iter().zip(qm.as_slice()).enumerate() {
        if pv == 0.0 {
            continue;
        }
        if qv <= 0.0 {
            return Err(Error::invalid(format!(
                "KL support violation at row {}, column {}: p > 0 where q = 0",
                idx / pm.cols(),
                idx % pm.cols()
            )));
        }
        total += pv * (pv / qv).ln();
    }
    Ok(total)
}

/// Row softmax, shifted by the row maximum.
pub fn softmax_rows(input: &Matrix) -> SoftAssignments {
    let mut out = input.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    SoftAssignments(out)
}

/// Row-wise `ln softmax`, used for KL terms against softmax outputs.
pub fn log_softmax_rows(input: &Matrix) -> Matrix {
    let mut out = input.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.iter_mut().for_each(|v| *v -= lse);
    }
    out
}

/// Symmetric `N x N` matrix of squared Euclidean distances with an exact zero diagonal.
pub fn pairwise_sq_dists(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(x.row(i), x.row(j));
            out.set(i, j, d);
            out.set(j, i, d);
        }
    }
    out
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-column mean and standard deviation (population).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Columns with zero variance keep unit scale so they map to zero.
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![0.0; x.cols()];
        for row in x.row_iter() {
            for ((v, m), acc) in row.iter().zip(&mean).zip(var.iter_mut()) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Zero mean, unit variance per column.
pub fn standardize(x: &Matrix) -> Matrix {
    Standardizer::fit(x).transform(x)
}

/// `a^T b` for two matrices with the same row count.
pub(crate) fn t_matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul_t(Trans::Yes, b, Trans::No)
}

/// `a b^T`.
pub(crate) fn matmul_t(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul_t(Trans::No, b, Trans::Yes)
}
