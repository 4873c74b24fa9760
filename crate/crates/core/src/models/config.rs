use serde::{Deserialize, Serialize};

use crate::autoencoder::AEConfig;
use crate::error::{Error, Result};
use crate::graph::KernelKind;
use crate::numeric::Activation;

/// Which SDCN head provides the hard labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictFrom {
    /// The graph head's softmax output.
    #[default]
    Z,
    /// The Student-t soft assignment on the latent space.
    Q,
}

impl std::str::FromStr for PredictFrom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(PredictFrom::Z),
            "q" => Ok(PredictFrom::Q),
            other => Err(Error::invalid(format!("predict_from must be z or q, got {other:?}"))),
        }
    }
}

/// Hyper-parameters shared by the deep-clustering trainers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcConfig {
    pub k: usize,
    pub hidden: Vec<usize>,
    /// Latent width for SDCN and AE+Birch; EDESC always uses `k * d_sub`.
    pub latent: usize,
    pub activation: Activation,
    pub pretrain_epochs: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Pretraining minibatch size; `None` is full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Standardize input columns before the autoencoder sees them.
    pub standardize: bool,

    pub knn_k: usize,
    pub kernel: KernelKind,
    /// Heat-kernel bandwidth; `None` uses the mean pairwise squared distance.
    pub heat_t: Option<f64>,
    /// Weight of the latent clustering KL term.
    pub alpha: f64,
    /// Weight of the graph-head KL term.
    pub beta: f64,
    /// Mixing weight of autoencoder features in the graph layers.
    pub epsilon: f64,
    pub student_v: f64,
    pub predict_from: PredictFrom,

    /// Weight of the subspace KL term.
    pub gamma: f64,
    pub d_sub: usize,
    pub eta: f64,
    /// Within-block orthonormality penalty weight.
    pub basis_orth_weight: f64,
    /// Cross-block overlap penalty weight.
    pub basis_sep_weight: f64,

    /// Epochs between recomputations of the sharpened target.
    pub update_interval: usize,
}

impl DcConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        DcConfig {
            k,
            hidden: AEConfig::DEFAULT_HIDDEN.to_vec(),
            latent: AEConfig::DEFAULT_LATENT,
            activation: Activation::Relu,
            pretrain_epochs: AEConfig::DEFAULT_EPOCHS,
            epochs: 50,
            lr: AEConfig::DEFAULT_LR,
            batch_size: None,
            seed,
            standardize: true,
            knn_k: crate::graph::DEFAULT_K,
            kernel: KernelKind::Heat,
            heat_t: None,
            alpha: 0.1,
            beta: 0.01,
            epsilon: 0.5,
            student_v: 1.0,
            predict_from: PredictFrom::Z,
            gamma: 0.1,
            d_sub: 5,
            eta: 1e-4,
            basis_orth_weight: 0.1,
            basis_sep_weight: 0.1,
            update_interval: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.k < 2 {
            return bad("deep-clustering trainers need k >= 2");
        }
        if self.epochs == 0 || self.pretrain_epochs == 0 {
            return bad("epochs and pretrain_epochs must be at least 1");
        }
        if self.update_interval == 0 {
            return bad("update_interval must be at least 1");
        }
        if self.d_sub == 0 {
            return bad("d_sub must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("basis_orth_weight", self.basis_orth_weight),
            ("basis_sep_weight", self.basis_sep_weight),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        if !(self.eta > 0.0) || !(self.student_v > 0.0) {
            return bad("eta and student_v must be positive");
        }
        Ok(())
    }

    /// Autoencoder settings for a given input and latent width.
    pub fn ae_config(&self, input_dim: usize, latent: usize) -> AEConfig {
        AEConfig {
            input_dim,
            hidden: self.hidden.clone(),
            latent,
            activation: self.activation,
            epochs: self.pretrain_epochs,
            lr: self.lr,
            seed: self.seed,
            batch_size: self.batch_size,
        }
    }

    pub fn edesc_latent(&self) -> usize {
        self.k * self.d_sub
    }
}
