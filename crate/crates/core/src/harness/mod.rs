//! Experiment orchestration: configs, runs, reports, similarity data and
//! runtime scaling.

mod bench;
mod config;
mod report;
mod run;
mod similarity;

pub use bench::{benchmark_k_scaling, runtime_csv, runtime_slope, KRuntime};
pub use config::{Algorithm, ExperimentConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};
pub use report::{column_name, emit_report, ReportFormat};
pub use run::{
    cluster_matrix, persist, pretrain_experiment, run_experiment, run_name, run_on_dataset, Clustered, RunOutcome, RunRecord, Timings,
    LABELS_FILE, RECORD_FILE, TRACE_FILE,
};
pub use similarity::{emit_similarity_data, SimilarityData};
