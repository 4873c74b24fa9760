//! AE+Birch and the silhouette-driven choice between it and SDCN.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderParams;
use crate::cluster::{birch, BirchConfig, ClusteringResult};
use crate::error::Result;
use crate::numeric::Matrix;

use super::common;
use super::config::DcConfig;
use super::trace::TrainTrace;

/// Largest allowed gap between the global best silhouette and the best in the final window.
pub const PLATEAU_GAP: f64 = 0.01;
/// Largest allowed population standard deviation of the final window.
pub const PLATEAU_STD: f64 = 0.02;

/// Pretrains the autoencoder without any clustering loss, then runs Birch on the codes.
pub fn ae_birch_pipeline(x: &Matrix, cfg: &DcConfig) -> Result<(ClusteringResult, TrainTrace)> {
    ae_birch_with_params(x, None, cfg)
}

pub fn ae_birch_with_params(
    x: &Matrix,
    pretrained: Option<AutoencoderParams>,
    cfg: &DcConfig,
) -> Result<(ClusteringResult, TrainTrace)> {
    cfg.validate()?;
    let started = Instant::now();
    let xs = common::prepare_input(x, cfg)?;
    let mut trace = TrainTrace::default();
    let ae = common::pretrained_ae(&xs, cfg, cfg.latent, pretrained, &mut trace)?;
    let h = common::latent(&xs, &ae)?;
    let r = birch(&h, &BirchConfig::new(cfg.k, cfg.seed))?;
    Ok((r.with_runtime(started.elapsed().as_secs_f64()), trace))
}

/// Whether the silhouette series has settled on a plateau.
///
/// The final window is the last quarter of the epochs (at least one). The
/// series counts as converged when the best silhouette in that window is
/// within [`PLATEAU_GAP`] of the overall best and the window's population
/// standard deviation is below [`PLATEAU_STD`]. Undefined silhouettes are
/// skipped; a window without any defined value is not converged.
pub fn silhouette_converged(silhouettes: &[Option<f64>]) -> bool {
    let window = silhouettes.len().div_ceil(4).max(1).min(silhouettes.len());
    let tail: Vec<f64> = silhouettes[silhouettes.len() - window..].iter().flatten().copied().collect();
    if tail.is_empty() {
        return false;
    }
    let global = silhouettes.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let local = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    global - local <= PLATEAU_GAP && var.sqrt() < PLATEAU_STD
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Sdcn,
    AeBirch,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Sdcn => "sdcn",
            ModelChoice::AeBirch => "ae_birch",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub result: ClusteringResult,
    pub choice: ModelChoice,
    /// The SDCN trace the decision was based on.
    pub trace: TrainTrace,
}

/// Keeps the SDCN result when its silhouette series converged, otherwise
/// falls back to AE+Birch (reusing `pretrained` when given).
pub fn select_model(
    x: &Matrix,
    cfg: &DcConfig,
    sdcn: (ClusteringResult, TrainTrace),
    pretrained: Option<AutoencoderParams>,
) -> Result<Selection> {
    let (result, trace) = sdcn;
    if silhouette_converged(&trace.silhouettes()) {
        return Ok(Selection {
            result,
            choice: ModelChoice::Sdcn,
            trace,
        });
    }
    let (fallback, _) = ae_birch_with_params(x, pretrained, cfg)?;
    Ok(Selection {
        result: fallback,
        choice: ModelChoice::AeBirch,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Activation, Dense};

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&s| Some(s)).collect()
    }

    #[test]
    fn rising_plateau_converges() {
        let s: Vec<f64> = (0..20).map(|e| 0.6 - 0.4 * (-(e as f64) / 3.0).exp()).collect();
        assert!(silhouette_converged(&some(&s)));
    }

    #[test]
    fn oscillation_does_not_converge() {
        let s: Vec<f64> = (0..20).map(|e| if e % 2 == 0 { 0.3 } else { 0.6 }).collect();
        assert!(!silhouette_converged(&some(&s)));
    }

    #[test]
    fn threshold_straddle() {
        // window = last 2 of 8 epochs; global best 0.50
        let base = [0.1, 0.5, 0.2, 0.2, 0.2, 0.2];
        let mut ok = base.to_vec();
        ok.extend([0.495, 0.49]);
        // gap 0.005, std 0.0025
        assert!(silhouette_converged(&some(&ok)));
        let mut gap = base.to_vec();
        gap.extend([0.485, 0.48]);
        assert!(!silhouette_converged(&some(&gap)));
        let mut wobble = base.to_vec();
        wobble.extend([0.5, 0.45]);
        // std exactly 0.025
        assert!(!silhouette_converged(&some(&wobble)));
    }

    #[test]
    fn undefined_values() {
        assert!(!silhouette_converged(&[]));
        assert!(!silhouette_converged(&[Some(0.5), None, None, None, None]));
        assert!(silhouette_converged(&[Some(0.5), None, None, Some(0.5)]));
    }

    #[test]
    fn identity_autoencoder_matches_raw_birch() {
        let (x, _) = crate::data::synth_blobs(90, 3, 3, 0.5, 4).unwrap();
        let eye = |act| Dense {
            weights: Matrix::identity(3),
            bias: Matrix::zeros(1, 3),
            activation: act,
        };
        let ae = AutoencoderParams {
            encoder: vec![eye(Activation::Linear)],
            decoder: vec![eye(Activation::Linear)],
        };
        let cfg = DcConfig {
            standardize: false,
            hidden: vec![],
            latent: 3,
            ..DcConfig::new(3, 4)
        };
        let (r, _) = ae_birch_with_params(&x, Some(ae), &cfg).unwrap();
        let raw = birch(&x, &BirchConfig::new(3, 4)).unwrap();
        assert_eq!(r.labels, raw.labels);
    }

    #[test]
    fn pipeline_reduces_dimension_and_separates_blobs() {
        let (x, truth) = crate::data::synth_blobs(80, 6, 2, 0.4, 9).unwrap();
        let cfg = DcConfig {
            hidden: vec![12],
            latent: 2,
            pretrain_epochs: 80,
            lr: 1e-2,
            ..DcConfig::new(2, 9)
        };
        let (r, trace) = ae_birch_pipeline(&x, &cfg).unwrap();
        assert_eq!(trace.pretrain_loss.len(), 80);
        assert!(trace.is_empty());
        let ari = crate::metrics::ari(&truth, &r.labels).unwrap();
        assert!(ari > 0.9, "{ari}");
    }
}
