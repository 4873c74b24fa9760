//! EDESC-style trainer: each cluster owns a `d_sub`-dimensional linear
//! subspace of the latent space, and points are assigned by how much of
//! their energy each subspace captures.

use std::time::Instant;

use crate::autoencoder::{AeForward, AutoencoderParams};
use crate::cluster::{birch_fit, BirchConfig, ClusteringResult};
use crate::error::{Error, Result};
use crate::numeric::linalg::{complete_orthonormal, gram_schmidt, symmetric_eigen};
use crate::numeric::ops::{mse_reconstruction_grad, mse_reconstruction_loss, t_matmul, matmul_t};
use crate::numeric::rng::{self, streams};
use crate::numeric::{Adam, Matrix, ParamTensors, SoftAssignments};

use super::common::{self, BestLabels};
use super::config::DcConfig;
use super::distributions::{raw_affinity, refined_affinity};
use super::trace::TrainTrace;

/// `z x (k * d_sub)` basis matrix; columns `j*d_sub..(j+1)*d_sub` span cluster `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBases {
    pub d: Matrix,
    pub k: usize,
    pub d_sub: usize,
}

impl SubspaceBases {
    pub fn new(d: Matrix, k: usize, d_sub: usize) -> Result<Self> {
        if k == 0 || d_sub == 0 || d.cols() != k * d_sub {
            return Err(Error::shape(
                "subspace bases",
                format!("{} columns for {k} blocks of width {d_sub}", d.cols()),
            ));
        }
        Ok(SubspaceBases { d, k, d_sub })
    }

    pub fn latent_dim(&self) -> usize {
        self.d.rows()
    }

    pub fn block(&self, j: usize) -> Matrix {
        self.d.column_block(j * self.d_sub, (j + 1) * self.d_sub)
    }

    /// Largest deviation of any block's Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        (0..self.k)
            .map(|j| {
                let b = self.block(j);
                t_matmul(&b, &b).unwrap().max_abs_diff(&Matrix::identity(self.d_sub))
            })
            .fold(0.0, f64::max)
    }
}

/// Top `count` uncentered principal directions of the rows of `h`.
fn principal_directions(h: &Matrix, count: usize) -> Vec<Vec<f64>> {
    let (n, z) = h.shape();
    let dirs: Vec<Vec<f64>> = if n < z {
        // the dual problem is smaller: eigenvectors u of H H^T map to H^T u
        let (vals, vecs) = symmetric_eigen(&matmul_t(h, h).unwrap());
        (0..n.min(count))
            .filter(|&c| vals[c] > 1e-12)
            .map(|c| {
                let u = vecs.column(c);
                (0..z).map(|r| (0..n).map(|i| h.get(i, r) * u[i]).sum()).collect()
            })
            .collect()
    } else {
        let (vals, vecs) = symmetric_eigen(&t_matmul(h, h).unwrap());
        (0..z.min(count)).filter(|&c| vals[c] > 1e-12).map(|c| vecs.column(c)).collect()
    };
    gram_schmidt(&dirs, &[])
}

/// Initial bases: Birch groups on the latent codes, each spanned by its top
/// principal directions. Blocks short of `d_sub` directions are completed
/// with random orthonormal vectors; each completion is reported in the notes.
pub fn init_subspace_bases(h: &Matrix, k: usize, d_sub: usize, seed: u64) -> Result<(SubspaceBases, Vec<String>)> {
    let z = h.cols();
    if d_sub > z {
        return Err(Error::invalid(format!("subspace width {d_sub} exceeds latent width {z}")));
    }
    let fit = birch_fit(h, &BirchConfig::new(k, seed))?;
    let mut rng = rng::stream(seed, streams::BASES);
    let mut notes = Vec::new();
    let mut d = Matrix::zeros(z, k * d_sub);
    for j in 0..k {
        let members: Vec<usize> = (0..h.rows()).filter(|&i| fit.labels[i] == j).collect();
        let mut basis = if members.is_empty() {
            Vec::new()
        } else {
            principal_directions(&h.select_rows(&members), d_sub)
        };
        if basis.len() < d_sub {
            notes.push(format!(
                "subspace {j}: {} of {d_sub} directions from {} points, rest random",
                basis.len(),
                members.len()
            ));
            complete_orthonormal(&mut basis, z, d_sub, &mut rng);
        }
        for (c, v) in basis.iter().enumerate() {
            for (r, &val) in v.iter().enumerate() {
                d.set(r, j * d_sub + c, val);
            }
        }
    }
    Ok((SubspaceBases::new(d, k, d_sub)?, notes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdescParams {
    pub ae: AutoencoderParams,
    pub bases: Matrix,
}

impl ParamTensors for EdescParams {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.ae.tensors();
        t.push(&self.bases);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.ae.tensors_mut();
        t.push(&mut self.bases);
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdescLoss {
    pub reconstruction: f64,
    /// `gamma * KL(S_refined || S) / N`.
    pub subspace: f64,
    pub regularizer: f64,
}

impl EdescLoss {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.subspace + self.regularizer
    }
}

#[derive(Clone, Debug)]
pub struct EdescForward {
    pub ae: AeForward,
    hd: Matrix,
    a: Matrix,
    pub s: SoftAssignments,
}

pub fn edesc_forward(x: &Matrix, params: &EdescParams, k: usize, d_sub: usize, eta: f64) -> Result<EdescForward> {
    let bases = SubspaceBases::new(params.bases.clone(), k, d_sub)?;
    if bases.latent_dim() != params.ae.latent_dim() {
        return Err(Error::shape(
            "edesc_forward",
            format!("bases of height {} for latent width {}", bases.latent_dim(), params.ae.latent_dim()),
        ));
    }
    let ae = AeForward::record(&params.ae, x)?;
    let (a, hd) = raw_affinity(ae.latent(), &bases, eta)?;
    let s = SoftAssignments::from_unnormalized(a.clone());
    Ok(EdescForward { ae, hd, a, s })
}

/// Block-structured penalty on `G = D^T D` and its residual weights `R`,
/// so that the penalty is `sum R ⊙ (G - I_blocks)` and its gradient `4 D R`.
fn basis_penalty(d: &Matrix, d_sub: usize, orth: f64, sep: f64) -> (f64, Matrix) {
    let g = t_matmul(d, d).unwrap();
    let m = g.rows();
    let mut value = 0.0;
    let r = Matrix::from_fn(m, m, |a, b| {
        let (w, dev) = if a / d_sub == b / d_sub {
            (orth, g.get(a, b) - if a == b { 1.0 } else { 0.0 })
        } else {
            (sep, g.get(a, b))
        };
        value += w * dev * dev;
        w * dev
    });
    (value, r)
}

fn forward_loss(x: &Matrix, params: &EdescParams, fwd: &EdescForward, target: &SoftAssignments, cfg: &DcConfig) -> Result<EdescLoss> {
    let n = x.rows() as f64;
    let log_s = fwd.s.matrix().map(f64::ln);
    Ok(EdescLoss {
        reconstruction: mse_reconstruction_loss(x, fwd.ae.reconstruction())?,
        subspace: cfg.gamma * common::kl_with_log(target, &log_s) / n,
        regularizer: basis_penalty(&params.bases, cfg.d_sub, cfg.basis_orth_weight, cfg.basis_sep_weight).0,
    })
}

/// Loss value at `params` with the refined target held fixed.
pub fn edesc_objective(x: &Matrix, params: &EdescParams, target: &SoftAssignments, cfg: &DcConfig) -> Result<f64> {
    let fwd = edesc_forward(x, params, cfg.k, cfg.d_sub, cfg.eta)?;
    Ok(forward_loss(x, params, &fwd, target, cfg)?.total())
}

pub fn edesc_gradients(
    x: &Matrix,
    params: &EdescParams,
    fwd: &EdescForward,
    target: &SoftAssignments,
    cfg: &DcConfig,
) -> Result<EdescParams> {
    let n = x.rows();
    let scale = cfg.gamma / n as f64;
    let ds = cfg.d_sub;
    let totals = fwd.a.row_sums();
    let g = Matrix::from_fn(n, cfg.k, |i, l| {
        scale * (1.0 / totals[i] - target.matrix().get(i, l) / fwd.a.get(i, l))
    });
    let d_hd = Matrix::from_fn(n, fwd.hd.cols(), |i, c| 2.0 * g.get(i, c / ds) * fwd.hd.get(i, c));
    let d_h = matmul_t(&d_hd, &params.bases)?;
    let mut d_bases = t_matmul(fwd.ae.latent(), &d_hd)?;
    let (_, r) = basis_penalty(&params.bases, ds, cfg.basis_orth_weight, cfg.basis_sep_weight);
    d_bases.axpy(4.0, &params.bases.matmul(&r)?)?;

    let layers = params.ae.encoder.len();
    let mut extra: Vec<Option<&Matrix>> = vec![None; layers];
    extra[layers - 1] = Some(&d_h);
    let d_rec = mse_reconstruction_grad(x, fwd.ae.reconstruction())?;
    let d_ae = fwd.ae.backward(&params.ae, d_rec, &extra)?;
    Ok(EdescParams {
        ae: d_ae,
        bases: d_bases,
    })
}

pub fn edesc_train(x: &Matrix, cfg: &DcConfig) -> Result<(ClusteringResult, TrainTrace)> {
    edesc_train_with(x, None, cfg)
}

/// Trains from a supplied pretrained autoencoder (latent width `k * d_sub`),
/// or pretrains one first.
pub fn edesc_train_with(
    x: &Matrix,
    pretrained: Option<AutoencoderParams>,
    cfg: &DcConfig,
) -> Result<(ClusteringResult, TrainTrace)> {
    cfg.validate()?;
    let started = Instant::now();
    let xs = common::prepare_input(x, cfg)?;
    let mut trace = TrainTrace::default();
    let ae = common::pretrained_ae(&xs, cfg, cfg.edesc_latent(), pretrained, &mut trace)?;
    let h = common::latent(&xs, &ae)?;
    let (bases, notes) = init_subspace_bases(&h, cfg.k, cfg.d_sub, cfg.seed)?;
    trace.notes.extend(notes);
    let mut params = EdescParams { ae, bases: bases.d };
    let mut opt = Adam::new(&params, cfg.lr);
    let mut best = BestLabels::default();
    let mut target: Option<SoftAssignments> = None;
    for epoch in 0..cfg.epochs {
        let fwd = edesc_forward(&xs, &params, cfg.k, cfg.d_sub, cfg.eta)?;
        if epoch % cfg.update_interval == 0 || target.is_none() {
            target = Some(refined_affinity(&fwd.s));
        }
        let t = target.as_ref().unwrap();
        let loss = forward_loss(&xs, &params, &fwd, t, cfg)?;
        if !loss.total().is_finite() {
            return Err(common::divergence(epoch, "EDESC loss", loss.total(), &trace));
        }
        let labels = fwd.s.hard_labels();
        let (sil, k_pred) = common::epoch_silhouette(fwd.ae.latent(), &labels, cfg.seed);
        common::record(&mut trace, epoch, [loss.reconstruction, loss.subspace, loss.regularizer], sil, k_pred);
        best.offer(sil, labels);
        let grads = edesc_gradients(&xs, &params, &fwd, t, cfg)?;
        opt.step(&mut params, &grads);
    }
    Ok((best.finish(started), trace))
}
