//! Running one (algorithm, dataset) pair end to end and persisting the outcome.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use crate::autoencoder::{load_checkpoint, save_checkpoint, AutoencoderParams};
use crate::cluster::{birch, kmeans, BirchConfig, ClusteringResult, KMeansConfig};
use crate::data::{load_dataset, save_labels, Dataset, DatasetManifest, TaskKind};
use crate::error::{Error, Result, StageExt};
use crate::metrics::MetricsReport;
use crate::models::{
    ae_birch_with_params, edesc_train_with, pretrain_autoencoder, sdcn_train_with, select_model, TrainTrace,
};
use crate::numeric::Matrix;

pub const RECORD_FILE: &str = "record.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Wall-clock seconds per phase; excluded from the deterministic payload.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load_seconds: f64,
    /// Clustering including any autoencoder pretraining.
    pub cluster_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub metrics: MetricsReport,
    /// Set when SDCN ran with model selection: `sdcn` or `ae_birch`.
    pub selected_model: Option<String>,
    /// Trace file relative to the run directory, when the algorithm trains.
    pub trace: Option<String>,
    pub trace_epochs: usize,
    pub notes: Vec<String>,
    pub timings: Timings,
}

impl RunRecord {
    /// `<dataset>__<algorithm>__seed<seed>`.
    pub fn run_name(&self) -> String {
        run_name(&self.dataset, self.algorithm, self.seed)
    }

    /// The record with every wall-clock value zeroed: identical across reruns
    /// of the same config and seed.
    pub fn deterministic(&self) -> RunRecord {
        let mut r = self.clone();
        r.timings = Timings::default();
        r.metrics.runtime_seconds = 0.0;
        r
    }

    pub fn payload_json(&self) -> String {
        serde_json::to_string_pretty(&self.deterministic()).expect("record serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

pub fn run_name(dataset: &str, algorithm: Algorithm, seed: u64) -> String {
    format!("{dataset}__{algorithm}__seed{seed}")
}

/// Result of clustering without persistence.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub labels: Vec<usize>,
    pub trace: Option<TrainTrace>,
}

fn pretrained(cfg: &ExperimentConfig) -> Result<Option<AutoencoderParams>> {
    cfg.checkpoint
        .as_ref()
        .map(|p| load_checkpoint(p).map(|(_, params)| params))
        .transpose()
}

/// Labels from one algorithm run, plus the trace when it trains.
#[derive(Clone, Debug)]
pub struct Clustered {
    pub result: ClusteringResult,
    pub trace: Option<TrainTrace>,
    /// Set when SDCN ran with model selection.
    pub selected_model: Option<String>,
}

/// Runs the configured algorithm on `x` with `k` clusters.
pub fn cluster_matrix(cfg: &ExperimentConfig, x: &Matrix, k: usize, task: TaskKind) -> Result<Clustered> {
    let seed = cfg.seed()?;
    let mut selected_model = None;
    let (result, trace) = match cfg.algorithm {
        Algorithm::Kmeans => (kmeans(x, &KMeansConfig::new(k, seed)).stage("cluster")?, None),
        Algorithm::Birch => (birch(x, &BirchConfig::new(k, seed)).stage("cluster")?, None),
        deep => {
            let dc = cfg.dc_config(k, task).stage("config")?;
            let given = pretrained(cfg).stage("checkpoint")?;
            let (r, t) = match deep {
                Algorithm::Sdcn if cfg.select_model => {
                    let sdcn = sdcn_train_with(x, given.clone(), &dc).stage("train")?;
                    let sel = select_model(x, &dc, sdcn, given).stage("train")?;
                    selected_model = Some(sel.choice.name().to_string());
                    (sel.result, sel.trace)
                }
                Algorithm::Sdcn => sdcn_train_with(x, given, &dc).stage("train")?,
                Algorithm::Edesc => edesc_train_with(x, given, &dc).stage("train")?,
                _ => ae_birch_with_params(x, given, &dc).stage("train")?,
            };
            (r, Some(t))
        }
    };
    Ok(Clustered {
        result,
        trace,
        selected_model,
    })
}

/// Clusters an already loaded dataset and evaluates the labels.
pub fn run_on_dataset(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunOutcome> {
    cfg.validate().stage("config")?;
    let seed = cfg.seed()?;
    let started = Instant::now();
    let Clustered {
        result,
        trace,
        selected_model,
    } = cluster_matrix(cfg, &data.embeddings.matrix, data.k, data.task)?;
    let cluster_seconds = started.elapsed().as_secs_f64();
    let metrics = MetricsReport::evaluate(&data.labels, &result.labels, cluster_seconds).stage("evaluate")?;
    let record = RunRecord {
        dataset: data.name.clone(),
        algorithm: cfg.algorithm,
        seed,
        config: cfg.clone(),
        metrics,
        selected_model,
        trace: trace.as_ref().map(|_| TRACE_FILE.to_string()),
        trace_epochs: trace.as_ref().map_or(0, TrainTrace::len),
        notes: trace.as_ref().map(|t| t.notes.clone()).unwrap_or_default(),
        timings: Timings {
            load_seconds: 0.0,
            cluster_seconds,
            total_seconds: cluster_seconds,
        },
    };
    Ok(RunOutcome {
        record,
        labels: result.labels,
        trace,
    })
}

/// Writes `record.json`, `labels.csv` and (for trainers) `trace.csv` under
/// `out_dir/<run name>/`, returning that directory.
pub fn persist(outcome: &RunOutcome, ids: &[String], out_dir: &Path) -> Result<PathBuf> {
    let dir = out_dir.join(outcome.record.run_name());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let rec = dir.join(RECORD_FILE);
    std::fs::write(&rec, outcome.record.to_json()).map_err(|e| Error::io(&rec, e))?;
    save_labels(dir.join(LABELS_FILE), ids, &outcome.labels)?;
    if let Some(t) = &outcome.trace {
        t.write_csv(dir.join(TRACE_FILE))?;
    }
    Ok(dir)
}

/// Load, cluster, evaluate and persist; every failure names its stage.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let started = Instant::now();
    cfg.validate().stage("config")?;
    let manifest_path = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| Error::invalid("no manifest given").in_stage("config"))?;
    let manifest = DatasetManifest::load(manifest_path).stage("manifest")?;
    let data = load_dataset(&manifest).map_err(|e| match e {
        tagged @ Error::Stage { .. } => tagged,
        other => other.in_stage("load"),
    })?;
    let load_seconds = started.elapsed().as_secs_f64();
    let mut outcome = run_on_dataset(cfg, &data)?;
    outcome.record.timings.load_seconds = load_seconds;
    outcome.record.timings.total_seconds = started.elapsed().as_secs_f64();
    persist(&outcome, &data.embeddings.ids, &cfg.out_dir).stage("persist")?;
    Ok(outcome.record)
}

/// Pretrains the autoencoder the configured algorithm would use and saves it
/// as a checkpoint; returns the final reconstruction loss.
pub fn pretrain_experiment(cfg: &ExperimentConfig, output: &Path) -> Result<f64> {
    cfg.validate().stage("config")?;
    if !cfg.algorithm.is_deep() {
        return Err(Error::invalid(format!("{} does not use an autoencoder", cfg.algorithm)).in_stage("config"));
    }
    let manifest_path = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| Error::invalid("no manifest given").in_stage("config"))?;
    let manifest = DatasetManifest::load(manifest_path).stage("manifest")?;
    let data = load_dataset(&manifest).map_err(|e| match e {
        tagged @ Error::Stage { .. } => tagged,
        other => other.in_stage("load"),
    })?;
    let dc = cfg.dc_config(data.k, data.task).stage("config")?;
    let latent = if cfg.algorithm == Algorithm::Edesc { dc.edesc_latent() } else { dc.latent };
    let (ae_cfg, pre) = pretrain_autoencoder(&data.embeddings.matrix, &dc, latent).stage("pretrain")?;
    save_checkpoint(output, &ae_cfg, &pre.params).stage("persist")?;
    Ok(pre.loss_trace.last().copied().unwrap_or(f64::NAN))
}
