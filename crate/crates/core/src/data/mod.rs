//! Embedding and label ingestion, dataset manifests, dimension normalization,
//! benchmark subsetting and synthetic data.

pub mod embeddings;
pub mod labels;
pub mod manifest;
pub mod musicbrainz;
pub mod normalize;
mod synth;

pub use embeddings::{load_embeddings, save_embeddings, EmbeddingFormat, EmbeddingMatrix};
pub use labels::{load_labels, save_labels, LabelSet};
pub use manifest::{load_dataset, Dataset, DatasetManifest, TaskKind};
pub use musicbrainz::{load_clustered_records, subset_musicbrainz, ClusteredRecord, Subset};
pub use normalize::{load_ragged, normalize_dims, NormalizeMode, RaggedEmbedding};
pub use synth::synth_blobs;
