//! Pieces shared by the training loops.

use std::time::Instant;

use crate::autoencoder::{encode, init_params, pretrain_from, AEConfig, AutoencoderParams, Pretrained};
use crate::cluster::silhouette::silhouette_auto;
use crate::cluster::ClusteringResult;
use crate::error::{Error, Result};
use crate::numeric::{standardize, Matrix, SoftAssignments};

use super::config::DcConfig;
use super::trace::{EpochRecord, TrainTrace};

pub(crate) fn prepare_input(x: &Matrix, config: &DcConfig) -> Result<Matrix> {
    if x.rows() < config.k {
        return Err(Error::invalid(format!(
            "{} clusters requested for {} items",
            config.k,
            x.rows()
        )));
    }
    Ok(if config.standardize { standardize(x) } else { x.clone() })
}

/// Pretrained autoencoder, either supplied or trained here on the prepared input.
pub(crate) fn pretrained_ae(
    xs: &Matrix,
    config: &DcConfig,
    latent: usize,
    given: Option<AutoencoderParams>,
    trace: &mut TrainTrace,
) -> Result<AutoencoderParams> {
    match given {
        Some(p) => {
            if p.input_dim() != xs.cols() || p.latent_dim() != latent {
                return Err(Error::shape(
                    "pretrained autoencoder",
                    format!(
                        "network is {}->{}, data needs {}->{}",
                        p.input_dim(),
                        p.latent_dim(),
                        xs.cols(),
                        latent
                    ),
                ));
            }
            Ok(p)
        }
        None => {
            let ae_cfg = config.ae_config(xs.cols(), latent);
            let r = pretrain_from(xs, init_params(&ae_cfg)?, &ae_cfg)?;
            trace.pretrain_loss = r.loss_trace;
            Ok(r.params)
        }
    }
}

/// Pretrains on `x` exactly as the trainers would (same input preparation and
/// seed), so the result can be handed back to them as a checkpoint.
pub fn pretrain_autoencoder(x: &Matrix, config: &DcConfig, latent: usize) -> Result<(AEConfig, Pretrained)> {
    config.validate()?;
    let xs = prepare_input(x, config)?;
    let ae_cfg = config.ae_config(xs.cols(), latent);
    let r = pretrain_from(&xs, init_params(&ae_cfg)?, &ae_cfg)?;
    Ok((ae_cfg, r))
}

pub(crate) fn latent(xs: &Matrix, params: &AutoencoderParams) -> Result<Matrix> {
    encode(xs, params)
}

/// Silhouette on the latent space; `None` when fewer than two clusters are predicted.
pub(crate) fn epoch_silhouette(h: &Matrix, labels: &[usize], seed: u64) -> (Option<f64>, usize) {
    let mut seen = vec![false; labels.iter().copied().max().map_or(0, |m| m + 1)];
    labels.iter().for_each(|&l| seen[l] = true);
    let k = seen.iter().filter(|&&s| s).count();
    let sil = if k >= 2 { silhouette_auto(h, labels, seed).ok() } else { None };
    (sil, k)
}

/// Keeps the labels of the best-silhouette epoch (earliest on ties).
#[derive(Default)]
pub(crate) struct BestLabels {
    best: Option<(f64, Vec<usize>)>,
    last: Vec<usize>,
}

impl BestLabels {
    pub(crate) fn offer(&mut self, silhouette: Option<f64>, labels: Vec<usize>) {
        if let Some(s) = silhouette {
            if self.best.as_ref().is_none_or(|(b, _)| s > *b) {
                self.best = Some((s, labels.clone()));
            }
        }
        self.last = labels;
    }

    pub(crate) fn finish(self, started: Instant) -> ClusteringResult {
        let labels = self.best.map_or(self.last, |(_, l)| l);
        ClusteringResult::from_raw_labels(&labels).with_runtime(started.elapsed().as_secs_f64())
    }
}

pub(crate) fn divergence(epoch: usize, what: &str, value: f64, trace: &TrainTrace) -> Error {
    Error::Divergence {
        epoch,
        detail: format!("{what} became {value}"),
        trace: Some(Box::new(trace.clone())),
    }
}

/// `sum_ij p_ij (ln p_ij - log_q_ij)` with `0 ln 0 = 0`.
pub(crate) fn kl_with_log(p: &SoftAssignments, log_q: &Matrix) -> f64 {
    p.matrix()
        .as_slice()
        .iter()
        .zip(log_q.as_slice())
        .map(|(&pv, &lq)| if pv > 0.0 { pv * (pv.ln() - lq) } else { 0.0 })
        .sum()
}

pub(crate) fn record(
    trace: &mut TrainTrace,
    epoch: usize,
    parts: [f64; 3],
    silhouette: Option<f64>,
    predicted_k: usize,
) {
    trace.epochs.push(EpochRecord {
        epoch,
        total_loss: parts.iter().sum(),
        reconstruction: parts[0],
        clustering: parts[1],
        auxiliary: parts[2],
        silhouette,
        predicted_k,
    });
}
