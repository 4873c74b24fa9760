//! Experiment configuration: flat `key = value` text, overridable key by key.
//!
//! Keys are the field names of [`ExperimentConfig`]; the command line uses
//! the same names as `--key value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AEConfig;
use crate::data::manifest::parse_key_values;
use crate::data::TaskKind;
use crate::error::{Error, Result};
use crate::graph::KernelKind;
use crate::models::{DcConfig, PredictFrom};
use crate::numeric::Activation;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DCBENCH_OUT";
pub const DEFAULT_OUT_DIR: &str = "dcbench-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sdcn,
    Edesc,
    AeBirch,
    Kmeans,
    Birch,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Sdcn,
        Algorithm::Edesc,
        Algorithm::AeBirch,
        Algorithm::Kmeans,
        Algorithm::Birch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sdcn => "sdcn",
            Algorithm::Edesc => "edesc",
            Algorithm::AeBirch => "ae_birch",
            Algorithm::Kmeans => "kmeans",
            Algorithm::Birch => "birch",
        }
    }

    /// Whether the algorithm trains an autoencoder.
    pub fn is_deep(self) -> bool {
        matches!(self, Algorithm::Sdcn | Algorithm::Edesc | Algorithm::AeBirch)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm {s:?} (sdcn, edesc, ae_birch, kmeans, birch)")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub manifest: Option<PathBuf>,
    pub algorithm: Algorithm,
    /// Mandatory; [`ExperimentConfig::validate`] rejects a missing seed.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Pretrained autoencoder to start from instead of pretraining.
    pub checkpoint: Option<PathBuf>,

    pub layers: usize,
    pub layer_size: usize,
    /// Latent width for SDCN and AE+Birch; EDESC uses `k * d_sub`.
    pub z: usize,
    pub activation: Activation,
    /// `None` picks by task: longer for entity resolution.
    pub pretrain_epochs: Option<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: Option<usize>,
    pub standardize: bool,

    pub knn_k: usize,
    pub kernel: KernelKind,
    pub t: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub predict_from: PredictFrom,
    /// Let SDCN fall back to AE+Birch when its silhouette series never settles.
    pub select_model: bool,

    pub gamma: f64,
    pub d_sub: usize,
    pub eta: f64,
    pub update_interval: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dc = DcConfig::new(2, 0);
        ExperimentConfig {
            manifest: None,
            algorithm: Algorithm::Kmeans,
            seed: None,
            out_dir: default_out_dir(),
            checkpoint: None,
            layers: AEConfig::DEFAULT_HIDDEN.len(),
            layer_size: AEConfig::DEFAULT_HIDDEN[0],
            z: dc.latent,
            activation: dc.activation,
            pretrain_epochs: None,
            epochs: dc.epochs,
            lr: dc.lr,
            batch_size: dc.batch_size,
            standardize: dc.standardize,
            knn_k: dc.knn_k,
            kernel: dc.kernel,
            t: dc.heat_t,
            alpha: dc.alpha,
            beta: dc.beta,
            epsilon: dc.epsilon,
            predict_from: dc.predict_from,
            select_model: false,
            gamma: dc.gamma,
            d_sub: dc.d_sub,
            eta: dc.eta,
            update_interval: dc.update_interval,
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse {value:?}")))
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value {
        "" | "none" | "auto" => Ok(None),
        v => parse_num(key, v).map(Some),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(Error::invalid(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn parse_activation(value: &str) -> Result<Activation> {
    match value {
        "relu" => Ok(Activation::Relu),
        "sigmoid" => Ok(Activation::Sigmoid),
        "linear" => Ok(Activation::Linear),
        v => Err(Error::invalid(format!("activation: unknown {v:?}"))),
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl ExperimentConfig {
    /// Every recognised key, in the order [`ExperimentConfig::to_text`] writes them.
    pub const KEYS: [&'static str; 27] = [
        "manifest",
        "algorithm",
        "seed",
        "out_dir",
        "checkpoint",
        "layers",
        "layer_size",
        "z",
        "activation",
        "pretrain_epochs",
        "epochs",
        "lr",
        "batch_size",
        "standardize",
        "knn_k",
        "kernel",
        "t",
        "alpha",
        "beta",
        "epsilon",
        "predict_from",
        "select_model",
        "gamma",
        "d_sub",
        "eta",
        "update_interval",
        "k_values",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "manifest" => self.manifest = Some(PathBuf::from(value)),
            "algorithm" => self.algorithm = value.parse()?,
            "seed" => self.seed = Some(parse_num(key, value)?),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "layers" => self.layers = parse_num(key, value)?,
            "layer_size" => self.layer_size = parse_num(key, value)?,
            "z" => self.z = parse_num(key, value)?,
            "activation" => self.activation = parse_activation(value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_optional(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "lr" => self.lr = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_optional(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "knn_k" => self.knn_k = parse_num(key, value)?,
            "kernel" => self.kernel = value.parse()?,
            "t" => self.t = parse_optional(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "beta" => self.beta = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "predict_from" => self.predict_from = value.parse()?,
            "select_model" => self.select_model = parse_bool(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "d_sub" => self.d_sub = parse_num(key, value)?,
            "eta" => self.eta = parse_num(key, value)?,
            "update_interval" => self.update_interval = parse_num(key, value)?,
            // consumed by bench-k; accepted here so one file can drive every subcommand
            "k_values" => {}
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        pairs.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    /// Defaults overridden by a config file; relative manifest and checkpoint
    /// paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&parse_key_values(&text, path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.manifest, &mut cfg.checkpoint].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or_else(String::new, |p| p.display().to_string());
        let values = [
            path(&self.manifest),
            self.algorithm.to_string(),
            self.seed.map_or_else(String::new, |s| s.to_string()),
            self.out_dir.display().to_string(),
            path(&self.checkpoint),
            self.layers.to_string(),
            self.layer_size.to_string(),
            self.z.to_string(),
            self.activation.name().to_string(),
            show_opt(&self.pretrain_epochs),
            self.epochs.to_string(),
            format!("{:?}", self.lr),
            show_opt(&self.batch_size),
            self.standardize.to_string(),
            self.knn_k.to_string(),
            self.kernel.name().to_string(),
            self.t.map_or_else(|| "auto".to_string(), |t| format!("{t:?}")),
            format!("{:?}", self.alpha),
            format!("{:?}", self.beta),
            format!("{:?}", self.epsilon),
            match self.predict_from {
                PredictFrom::Z => "z".to_string(),
                PredictFrom::Q => "q".to_string(),
            },
            self.select_model.to_string(),
            format!("{:?}", self.gamma),
            self.d_sub.to_string(),
            format!("{:?}", self.eta),
            self.update_interval.to_string(),
        ];
        Self::KEYS
            .iter()
            .zip(values)
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("a seed is required (set seed in the config or pass --seed)"))
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if self.algorithm.is_deep() {
            if self.layers == 0 || self.layer_size == 0 {
                return Err(Error::invalid("layers and layer_size must be at least 1"));
            }
            if self.z == 0 {
                return Err(Error::invalid("z must be at least 1"));
            }
            if self.epochs == 0 && self.algorithm != Algorithm::AeBirch {
                return Err(Error::invalid("epochs must be at least 1"));
            }
            if !(self.lr > 0.0) {
                return Err(Error::invalid("lr must be positive"));
            }
        }
        if self.algorithm == Algorithm::Sdcn && self.knn_k == 0 {
            return Err(Error::invalid("knn_k must be at least 1"));
        }
        Ok(())
    }

    pub fn pretrain_epochs_for(&self, task: TaskKind) -> usize {
        self.pretrain_epochs.unwrap_or(match task {
            TaskKind::EntityResolution => AEConfig::ENTITY_RESOLUTION_EPOCHS,
            _ => AEConfig::DEFAULT_EPOCHS,
        })
    }

    /// Trainer settings for `k` clusters on a dataset of the given task.
    pub fn dc_config(&self, k: usize, task: TaskKind) -> Result<DcConfig> {
        let cfg = DcConfig {
            hidden: vec![self.layer_size; self.layers],
            latent: self.z,
            activation: self.activation,
            pretrain_epochs: self.pretrain_epochs_for(task),
            epochs: self.epochs.max(1),
            lr: self.lr,
            batch_size: self.batch_size,
            standardize: self.standardize,
            knn_k: self.knn_k,
            kernel: self.kernel,
            heat_t: self.t,
            alpha: self.alpha,
            beta: self.beta,
            epsilon: self.epsilon,
            predict_from: self.predict_from,
            gamma: self.gamma,
            d_sub: self.d_sub,
            eta: self.eta,
            update_interval: self.update_interval,
            ..DcConfig::new(k, self.seed()?)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("seed", "9").unwrap();
        cfg.set("algorithm", "edesc").unwrap();
        cfg.set("t", "0.25").unwrap();
        cfg.set("batch_size", "64").unwrap();
        let text = cfg.to_text();
        let mut back = ExperimentConfig::default();
        back.apply(&parse_key_values(&text, Path::new("cfg")).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_seed() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("learning_rate", "0.1").is_err());
        assert!(cfg.validate().is_err());
        cfg.set("seed", "1").unwrap();
        cfg.validate().unwrap();
        assert!(cfg.set("algorithm", "dbscan").is_err());
        assert!(cfg.set("standardize", "maybe").is_err());
    }

    #[test]
    fn pretraining_length_follows_task() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = Some(0);
        assert_eq!(cfg.dc_config(3, TaskKind::SchemaInference).unwrap().pretrain_epochs, 30);
        assert_eq!(cfg.dc_config(3, TaskKind::EntityResolution).unwrap().pretrain_epochs, 100);
        cfg.pretrain_epochs = Some(7);
        assert_eq!(cfg.dc_config(3, TaskKind::EntityResolution).unwrap().pretrain_epochs, 7);
        assert_eq!(cfg.dc_config(3, TaskKind::DomainDiscovery).unwrap().hidden, vec![1000, 1000]);
    }
}
