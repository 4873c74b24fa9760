//! Deep-clustering trainers.

mod common;
mod config;
mod distributions;
pub mod edesc;
pub mod pipeline;
pub mod sdcn;
mod trace;

pub use common::pretrain_autoencoder;
pub use config::{DcConfig, PredictFrom};
pub use distributions::{refined_affinity, soft_assignment_q, subspace_affinity, target_distribution_p};
pub use edesc::{edesc_train, edesc_train_with, init_subspace_bases, SubspaceBases};
pub use pipeline::{ae_birch_pipeline, ae_birch_with_params, select_model, silhouette_converged, ModelChoice, Selection};
pub use sdcn::{sdcn_train, sdcn_train_with};
pub use trace::{EpochRecord, TrainTrace, TRACE_HEADER};
