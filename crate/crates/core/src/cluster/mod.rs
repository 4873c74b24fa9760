//! Standard clustering baselines (K-means, Birch) and the silhouette score.

pub mod birch;
pub mod kmeans;
mod result;
pub mod silhouette;

pub use birch::{birch, birch_fit, BirchConfig, CfTree, ClusteringFeature};
pub use kmeans::{kmeans, kmeans_fit, KMeansConfig, KMeansInit};
pub use result::ClusteringResult;
pub use silhouette::{silhouette, silhouette_auto, silhouette_from_dists};
