//! Deep-clustering engine and benchmark harness for data-integration tasks.
//!
//! Models cluster precomputed embedding matrices (tables, rows or columns):
//! autoencoder-based deep clustering (SDCN-style and EDESC-style trainers and
//! an autoencoder + Birch pipeline) next to K-means and Birch baselines, all
//! evaluated with ARI, Hungarian-mapped accuracy and cluster-shape statistics.

pub mod autoencoder;
pub mod cluster;
pub mod data;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod numeric;

pub use error::{Error, Result};
