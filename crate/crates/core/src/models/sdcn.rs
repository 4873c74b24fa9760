//! SDCN-style trainer: an autoencoder and a graph-convolution stack over a KNN
//! graph, coupled by feeding each encoder layer into the matching graph layer
//! and trained under a shared sharpened target `P`.
//!
//! Graph layer `l` consumes `(1 - eps) Z_{l-1} + eps E_{l-1}` where `E` are the
//! encoder layer outputs (the first graph layer consumes `X`). Every graph
//! layer is ReLU except the last, which maps to `k` logits.

use std::time::Instant;

use crate::autoencoder::{AeForward, AutoencoderParams};
use crate::cluster::{kmeans_fit, ClusteringResult, KMeansConfig};
use crate::error::{Error, Result};
use crate::graph::{knn_graph_from_features, NormalizedAdjacency};
use crate::numeric::ops::{log_softmax_rows, mse_reconstruction_grad, mse_reconstruction_loss, sq_dist, t_matmul, matmul_t};
use crate::numeric::rng::{self, streams};
use crate::numeric::tape::glorot_bound;
use crate::numeric::{softmax_rows, Adam, Matrix, ParamTensors, SoftAssignments};

use super::common::{self, BestLabels};
use super::config::{DcConfig, PredictFrom};
use super::distributions::{soft_assignment_q, target_distribution_p};
use super::trace::TrainTrace;

#[derive(Clone, Debug, PartialEq)]
pub struct SdcnParams {
    pub ae: AutoencoderParams,
    /// Graph layer weights, input side first; the last maps to `k`.
    pub gcn: Vec<Matrix>,
    /// `k x z` cluster centers in latent space.
    pub centers: Matrix,
}

impl ParamTensors for SdcnParams {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.ae.tensors();
        t.extend(self.gcn.iter());
        t.push(&self.centers);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.ae.tensors_mut();
        t.extend(self.gcn.iter_mut());
        t.push(&mut self.centers);
        t
    }
}

/// Glorot-uniform graph weights mirroring the encoder widths, then `z -> k`.
pub fn init_gcn_weights(ae: &AutoencoderParams, k: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = rng::stream(seed, streams::GCN_INIT);
    let mut sizes: Vec<usize> = vec![ae.input_dim()];
    sizes.extend(ae.encoder.iter().map(|l| l.fan_out()));
    sizes.push(k);
    sizes
        .windows(2)
        .map(|w| {
            let a = glorot_bound(w[0], w[1]);
            Matrix::from_fn(w[0], w[1], |_, _| rand::Rng::random_range(&mut rng, -a..=a))
        })
        .collect()
}

/// Forward values kept for backpropagation.
#[derive(Clone, Debug)]
pub struct SdcnForward {
    pub ae: AeForward,
    gcn_inputs: Vec<Matrix>,
    gcn_pre: Vec<Matrix>,
    pub q: SoftAssignments,
    pub z: SoftAssignments,
    log_z: Matrix,
}

impl SdcnForward {
    pub fn latent(&self) -> &Matrix {
        self.ae.latent()
    }

    pub fn reconstruction(&self) -> &Matrix {
        self.ae.reconstruction()
    }

    pub fn logits(&self) -> &Matrix {
        self.gcn_pre.last().unwrap()
    }
}

pub fn sdcn_forward(
    x: &Matrix,
    params: &SdcnParams,
    adj: &NormalizedAdjacency,
    epsilon: f64,
    student_v: f64,
) -> Result<SdcnForward> {
    let layers = params.gcn.len();
    if layers != params.ae.encoder.len() + 1 {
        return Err(Error::shape(
            "sdcn_forward",
            format!("{} graph layers for {} encoder layers", layers, params.ae.encoder.len()),
        ));
    }
    if adj.nodes() != x.rows() {
        return Err(Error::shape(
            "sdcn_forward",
            format!("adjacency over {} nodes, data has {} rows", adj.nodes(), x.rows()),
        ));
    }
    let ae = AeForward::record(&params.ae, x)?;
    let mut gcn_inputs = Vec::with_capacity(layers);
    let mut gcn_pre = Vec::with_capacity(layers);
    let mut input = x.clone();
    for (l, w) in params.gcn.iter().enumerate() {
        let pre = adj.matmul(&input.matmul(w)?)?;
        let next = if l + 1 < layers {
            let enc = ae.encoder_layer(l);
            pre.zip_with(enc, "delivery", |zv, ev| (1.0 - epsilon) * zv.max(0.0) + epsilon * ev)?
        } else {
            Matrix::zeros(0, 0)
        };
        gcn_inputs.push(std::mem::replace(&mut input, next));
        gcn_pre.push(pre);
    }
    let q = soft_assignment_q(ae.latent(), &params.centers, student_v)?;
    let logits = gcn_pre.last().unwrap();
    Ok(SdcnForward {
        q,
        z: softmax_rows(logits),
        log_z: log_softmax_rows(logits),
        ae,
        gcn_inputs,
        gcn_pre,
    })
}

/// Loss components; the KL terms are averaged over rows and already weighted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdcnLoss {
    pub reconstruction: f64,
    pub kl_q: f64,
    pub kl_z: f64,
}

impl SdcnLoss {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.kl_q + self.kl_z
    }
}

/// `recon(x, x_hat) + alpha KL(P||Q) / N + beta KL(P||Z) / N`.
pub fn sdcn_loss(
    x: &Matrix,
    x_hat: &Matrix,
    p: &SoftAssignments,
    q: &SoftAssignments,
    z: &SoftAssignments,
    alpha: f64,
    beta: f64,
) -> Result<SdcnLoss> {
    let n = x.rows() as f64;
    let reconstruction = mse_reconstruction_loss(x, x_hat)?;
    let kl_q = if alpha == 0.0 { 0.0 } else { alpha * crate::numeric::kl_divergence(p, q)? / n };
    let kl_z = if beta == 0.0 { 0.0 } else { beta * crate::numeric::kl_divergence(p, z)? / n };
    Ok(SdcnLoss {
        reconstruction,
        kl_q,
        kl_z,
    })
}

/// Loss of a recorded forward pass; the graph KL uses log-softmax so it stays finite.
fn forward_loss(x: &Matrix, fwd: &SdcnForward, p: &SoftAssignments, cfg: &DcConfig) -> Result<SdcnLoss> {
    let n = x.rows() as f64;
    let log_q = fwd.q.matrix().map(f64::ln);
    Ok(SdcnLoss {
        reconstruction: mse_reconstruction_loss(x, fwd.reconstruction())?,
        kl_q: cfg.alpha * common::kl_with_log(p, &log_q) / n,
        kl_z: cfg.beta * common::kl_with_log(p, &fwd.log_z) / n,
    })
}

/// Loss value at `params` with the target `p` held fixed.
pub fn sdcn_objective(x: &Matrix, params: &SdcnParams, adj: &NormalizedAdjacency, p: &SoftAssignments, cfg: &DcConfig) -> Result<f64> {
    let fwd = sdcn_forward(x, params, adj, cfg.epsilon, cfg.student_v)?;
    Ok(forward_loss(x, &fwd, p, cfg)?.total())
}

/// Exact gradient of the SDCN loss with `p` held fixed.
pub fn sdcn_gradients(
    x: &Matrix,
    params: &SdcnParams,
    adj: &NormalizedAdjacency,
    fwd: &SdcnForward,
    p: &SoftAssignments,
    cfg: &DcConfig,
) -> Result<SdcnParams> {
    let n = x.rows();
    let nf = n as f64;
    let h = fwd.latent();
    let mu = &params.centers;
    let k = mu.rows();
    let v = cfg.student_v;

    // latent clustering term through the squared distances
    let coef = (v + 1.0) / (2.0 * v) * cfg.alpha / nf;
    let g = Matrix::from_fn(n, k, |i, j| {
        let d = sq_dist(h.row(i), mu.row(j));
        coef * (p.matrix().get(i, j) - fwd.q.matrix().get(i, j)) / (1.0 + d / v)
    });
    let mut d_h = g.matmul(mu)?;
    d_h.scale_mut(-2.0);
    for (i, gs) in g.row_sums().into_iter().enumerate() {
        for (dv, hv) in d_h.row_mut(i).iter_mut().zip(h.row(i)) {
            *dv += 2.0 * gs * hv;
        }
    }
    let mut d_mu = t_matmul(&g, h)?;
    d_mu.scale_mut(-2.0);
    for (j, gs) in g.column_sums().into_iter().enumerate() {
        for (dv, mv) in d_mu.row_mut(j).iter_mut().zip(mu.row(j)) {
            *dv += 2.0 * gs * mv;
        }
    }

    // graph stack, last layer first
    let layers = params.gcn.len();
    let mut d_out = fwd.z.matrix().zip_with(p.matrix(), "sdcn graph head", |zv, pv| cfg.beta * (zv - pv) / nf)?;
    let mut d_gcn = vec![Matrix::zeros(0, 0); layers];
    let mut enc_extra: Vec<Option<Matrix>> = vec![None; layers - 1];
    for l in (0..layers).rev() {
        let d_pre = if l + 1 == layers {
            d_out
        } else {
            d_out.zip_with(&fwd.gcn_pre[l], "relu", |dv, pre| if pre > 0.0 { dv } else { 0.0 })?
        };
        let t = adj.matmul(&d_pre)?;
        d_gcn[l] = t_matmul(&fwd.gcn_inputs[l], &t)?;
        if l == 0 {
            break;
        }
        let d_in = matmul_t(&t, &params.gcn[l])?;
        enc_extra[l - 1] = Some(d_in.scale(cfg.epsilon));
        d_out = d_in.scale(1.0 - cfg.epsilon);
    }
    let last = layers - 2;
    match &mut enc_extra[last] {
        Some(m) => m.axpy(1.0, &d_h)?,
        slot => *slot = Some(d_h),
    }

    let d_rec = mse_reconstruction_grad(x, fwd.reconstruction())?;
    let extra_refs: Vec<Option<&Matrix>> = enc_extra.iter().map(Option::as_ref).collect();
    let d_ae = fwd.ae.backward(&params.ae, d_rec, &extra_refs)?;
    Ok(SdcnParams {
        ae: d_ae,
        gcn: d_gcn,
        centers: d_mu,
    })
}

/// Everything a training run needs besides the data.
pub struct SdcnSetup {
    pub params: SdcnParams,
    pub adjacency: NormalizedAdjacency,
}

/// KNN graph on the prepared input, K-means centers on the pretrained latent space.
pub fn sdcn_setup(xs: &Matrix, ae: AutoencoderParams, cfg: &DcConfig) -> Result<SdcnSetup> {
    let kernel = cfg.kernel.resolve(xs, cfg.heat_t)?;
    let graph = knn_graph_from_features(xs, kernel, cfg.knn_k)?;
    let adjacency = NormalizedAdjacency::from_graph(&graph);
    let h = common::latent(xs, &ae)?;
    let centers = kmeans_fit(&h, &KMeansConfig::new(cfg.k, cfg.seed))?.centroids;
    let gcn = init_gcn_weights(&ae, cfg.k, cfg.seed);
    Ok(SdcnSetup {
        params: SdcnParams { ae, gcn, centers },
        adjacency,
    })
}

pub fn sdcn_train(x: &Matrix, cfg: &DcConfig) -> Result<(ClusteringResult, TrainTrace)> {
    sdcn_train_with(x, None, cfg)
}

/// Trains from a supplied pretrained autoencoder, or pretrains one first.
pub fn sdcn_train_with(
    x: &Matrix,
    pretrained: Option<AutoencoderParams>,
    cfg: &DcConfig,
) -> Result<(ClusteringResult, TrainTrace)> {
    cfg.validate()?;
    let started = Instant::now();
    let xs = common::prepare_input(x, cfg)?;
    let mut trace = TrainTrace::default();
    let ae = common::pretrained_ae(&xs, cfg, cfg.latent, pretrained, &mut trace)?;
    let SdcnSetup {
        mut params,
        adjacency,
    } = sdcn_setup(&xs, ae, cfg)?;
    let mut opt = Adam::new(&params, cfg.lr);
    let mut best = BestLabels::default();
    let mut p: Option<SoftAssignments> = None;
    for epoch in 0..cfg.epochs {
        let fwd = sdcn_forward(&xs, &params, &adjacency, cfg.epsilon, cfg.student_v)?;
        if epoch % cfg.update_interval == 0 || p.is_none() {
            p = Some(target_distribution_p(&fwd.q));
        }
        let target = p.as_ref().unwrap();
        let loss = forward_loss(&xs, &fwd, target, cfg)?;
        if !loss.total().is_finite() {
            return Err(common::divergence(epoch, "SDCN loss", loss.total(), &trace));
        }
        let labels = match cfg.predict_from {
            PredictFrom::Z => fwd.z.hard_labels(),
            PredictFrom::Q => fwd.q.hard_labels(),
        };
        let (sil, k_pred) = common::epoch_silhouette(fwd.latent(), &labels, cfg.seed);
        common::record(&mut trace, epoch, [loss.reconstruction, loss.kl_q, loss.kl_z], sil, k_pred);
        best.offer(sil, labels);
        let grads = sdcn_gradients(&xs, &params, &adjacency, &fwd, target, cfg)?;
        opt.step(&mut params, &grads);
    }
    Ok((best.finish(started), trace))
}
