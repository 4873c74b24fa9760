//! Fully connected autoencoder and reconstruction pretraining.
//!
//! The encoder maps `d -> hidden... -> z`; the decoder mirrors it back to `d`.
//! Hidden layers use the configured activation (ReLU by default); the latent
//! and reconstruction layers are linear.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TrainTrace;
use crate::numeric::ops::{mse_reconstruction_grad, mse_reconstruction_loss};
use crate::numeric::rng::{self, streams};
use crate::numeric::{Activation, Adam, Dense, GradientTape, Matrix, ParamTensors};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AEConfig {
    pub input_dim: usize,
    /// Encoder hidden widths, input side first. The decoder uses them reversed.
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Rows per gradient step; `None` trains full-batch.
    pub batch_size: Option<usize>,
}

impl AEConfig {
    pub const DEFAULT_HIDDEN: [usize; 2] = [1000, 1000];
    pub const DEFAULT_LATENT: usize = 100;
    pub const DEFAULT_EPOCHS: usize = 30;
    pub const ENTITY_RESOLUTION_EPOCHS: usize = 100;
    pub const DEFAULT_LR: f64 = 1e-3;

    pub fn new(input_dim: usize, seed: u64) -> Self {
        AEConfig {
            input_dim,
            hidden: Self::DEFAULT_HIDDEN.to_vec(),
            latent: Self::DEFAULT_LATENT,
            activation: Activation::Relu,
            epochs: Self::DEFAULT_EPOCHS,
            lr: Self::DEFAULT_LR,
            seed,
            batch_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent == 0 || self.hidden.contains(&0) {
            return Err(Error::invalid("autoencoder layer sizes must be positive"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }

    /// Layer widths from input to latent.
    pub fn encoder_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim];
        s.extend(&self.hidden);
        s.push(self.latent);
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderParams {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
}

impl ParamTensors for AutoencoderParams {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.encoder.tensors();
        t.extend(self.decoder.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.decoder.tensors_mut());
        t
    }
}

impl AutoencoderParams {
    pub fn input_dim(&self) -> usize {
        self.encoder[0].fan_in()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().unwrap().fan_out()
    }
}

fn stack<R: rand::Rng>(sizes: &[usize], act: Activation, rng: &mut R) -> Vec<Dense> {
    let last = sizes.len() - 2;
    sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let a = if i == last { Activation::Linear } else { act };
            Dense::glorot(w[0], w[1], a, rng)
        })
        .collect()
}

/// Glorot-uniform weights and zero biases, seeded from `config.seed`.
pub fn init_params(config: &AEConfig) -> Result<AutoencoderParams> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, streams::AE_INIT);
    let enc_sizes = config.encoder_sizes();
    let dec_sizes: Vec<usize> = enc_sizes.iter().rev().copied().collect();
    let encoder = stack(&enc_sizes, config.activation, &mut rng);
    let decoder = stack(&dec_sizes, config.activation, &mut rng);
    Ok(AutoencoderParams { encoder, decoder })
}

fn run(layers: &[Dense], input: &Matrix, op: &'static str) -> Result<Matrix> {
    if input.cols() != layers[0].fan_in() {
        return Err(Error::shape(
            op,
            format!("input has {} columns, network expects {}", input.cols(), layers[0].fan_in()),
        ));
    }
    let mut cur = input.clone();
    for l in layers {
        cur = l.forward(&cur)?.1;
    }
    Ok(cur)
}

pub fn encode(x: &Matrix, params: &AutoencoderParams) -> Result<Matrix> {
    run(&params.encoder, x, "encode")
}

pub fn decode(h: &Matrix, params: &AutoencoderParams) -> Result<Matrix> {
    run(&params.decoder, h, "decode")
}

/// Recorded forward pass through both stacks.
#[derive(Clone, Debug)]
pub struct AeForward {
    pub encoder: GradientTape,
    pub decoder: GradientTape,
}

impl AeForward {
    pub fn record(params: &AutoencoderParams, x: &Matrix) -> Result<Self> {
        if x.cols() != params.input_dim() {
            return Err(Error::shape(
                "autoencoder forward",
                format!("input has {} columns, network expects {}", x.cols(), params.input_dim()),
            ));
        }
        let encoder = GradientTape::record(&params.encoder, x)?;
        let decoder = GradientTape::record(&params.decoder, encoder.output().unwrap())?;
        Ok(AeForward { encoder, decoder })
    }

    pub fn latent(&self) -> &Matrix {
        self.encoder.output().unwrap()
    }

    /// Output of encoder layer `i` (the last one is the latent representation).
    pub fn encoder_layer(&self, i: usize) -> &Matrix {
        self.encoder.layer_output(i)
    }

    pub fn reconstruction(&self) -> &Matrix {
        self.decoder.output().unwrap()
    }

    /// Parameter gradients given the gradient w.r.t. the reconstruction and
    /// optional extra gradients w.r.t. each encoder layer's output.
    pub fn backward(
        &self,
        params: &AutoencoderParams,
        d_reconstruction: Matrix,
        encoder_extra: &[Option<&Matrix>],
    ) -> Result<AutoencoderParams> {
        let (decoder, d_latent) = self.decoder.backward(&params.decoder, d_reconstruction, &[], true)?;
        let (encoder, _) = self
            .encoder
            .backward(&params.encoder, d_latent.expect("input gradient requested"), encoder_extra, false)?;
        Ok(AutoencoderParams { encoder, decoder })
    }
}

/// Reconstruction loss and its parameter gradients.
pub fn reconstruction_loss_grad(params: &AutoencoderParams, x: &Matrix) -> Result<(f64, AutoencoderParams)> {
    let fwd = AeForward::record(params, x)?;
    let loss = mse_reconstruction_loss(x, fwd.reconstruction())?;
    let d = mse_reconstruction_grad(x, fwd.reconstruction())?;
    let grads = fwd.backward(params, d, &[])?;
    Ok((loss, grads))
}

#[derive(Clone, Debug)]
pub struct Pretrained {
    pub params: AutoencoderParams,
    /// Reconstruction loss per epoch, measured before that epoch's updates
    /// (row-weighted mean over minibatches when batching).
    pub loss_trace: Vec<f64>,
}

pub fn pretrain(x: &Matrix, config: &AEConfig) -> Result<Pretrained> {
    let params = init_params(config)?;
    pretrain_from(x, params, config)
}

/// Continues reconstruction training from `params`.
pub fn pretrain_from(x: &Matrix, mut params: AutoencoderParams, config: &AEConfig) -> Result<Pretrained> {
    config.validate()?;
    if config.epochs == 0 {
        return Err(Error::invalid("pretraining needs at least one epoch"));
    }
    if x.rows() == 0 {
        return Err(Error::invalid("pretraining needs at least one row"));
    }
    if x.cols() != params.input_dim() {
        return Err(Error::shape(
            "pretrain",
            format!("input has {} columns, network expects {}", x.cols(), params.input_dim()),
        ));
    }
    let mut opt = Adam::new(&params, config.lr);
    let mut shuffle_rng = rng::stream(config.seed, streams::AE_SHUFFLE);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let loss = match config.batch_size {
            Some(b) if b < x.rows() => {
                order.shuffle(&mut shuffle_rng);
                let mut weighted = 0.0;
                for chunk in order.chunks(b) {
                    let xb = x.select_rows(chunk);
                    let (l, g) = reconstruction_loss_grad(&params, &xb)?;
                    weighted += l * chunk.len() as f64;
                    if l.is_finite() {
                        opt.step(&mut params, &g);
                    }
                }
                weighted / x.rows() as f64
            }
            _ => {
                let (l, g) = reconstruction_loss_grad(&params, x)?;
                if l.is_finite() {
                    opt.step(&mut params, &g);
                }
                l
            }
        };
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("reconstruction loss became {loss}"),
                trace: Some(Box::new(TrainTrace {
                    pretrain_loss: trace,
                    ..Default::default()
                })),
            });
        }
        trace.push(loss);
    }
    Ok(Pretrained {
        params,
        loss_trace: trace,
    })
}
