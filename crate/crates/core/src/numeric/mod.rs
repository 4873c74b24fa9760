//! Dense numeric kernel shared by every model: matrices, layers, losses,
//! the optimizer and gradient verification.

pub mod gradcheck;
pub mod linalg;
mod matrix;
pub mod ops;
pub mod optim;
pub mod rng;
pub mod tape;

pub use gradcheck::finite_diff_check;
pub use matrix::{Matrix, Trans};
pub use ops::{
    activation, affine, kl_divergence, mse_reconstruction_loss, pairwise_sq_dists, softmax_rows,
    standardize, Activation, SoftAssignments, Standardizer,
};
pub use optim::{adam_step, Adam, AdamHyper, AdamState, ParamTensors};
pub use tape::{Dense, GradientTape};
