//! Dataset manifests: `key = value` lines, `#` comments.
//!
//! ```text
//! name = webtables-sbert
//! task = schema_inference
//! embeddings = sbert.csv
//! labels = gt.csv
//! k = 26
//! normalize = interpolate   # optional: interpolate | drop_trailing
//! notes = SBERT over serialized tables
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::embeddings::{load_embeddings, EmbeddingMatrix};
use super::labels::load_labels;
use super::normalize::{load_ragged, normalize_dims, NormalizeMode};
use crate::error::{Error, Result, StageExt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SchemaInference,
    EntityResolution,
    DomainDiscovery,
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schema_inference" => Ok(TaskKind::SchemaInference),
            "entity_resolution" => Ok(TaskKind::EntityResolution),
            "domain_discovery" => Ok(TaskKind::DomainDiscovery),
            other => Err(Error::invalid(format!("unknown task kind {other:?}"))),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::SchemaInference => "schema_inference",
            TaskKind::EntityResolution => "entity_resolution",
            TaskKind::DomainDiscovery => "domain_discovery",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub task: TaskKind,
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    /// Ground-truth cluster count; checked against the labels file when loaded.
    pub k: usize,
    /// Resample ragged embeddings before use.
    pub normalize: Option<NormalizeMode>,
    pub notes: Option<String>,
}

/// Parses `key = value` lines; later keys override earlier ones.
pub fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, format!("expected key = value, got {raw:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let mut kv = parse_key_values(text, path)?;
        let mut take = |key: &str| {
            kv.remove(key)
                .ok_or_else(|| Error::parse(path, 0, format!("manifest is missing {key:?}")))
        };
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let manifest = DatasetManifest {
            name: take("name")?,
            task: take("task")?.parse()?,
            embeddings: resolve(take("embeddings")?),
            labels: resolve(take("labels")?),
            k: take("k")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "k must be a positive integer"))?,
            normalize: take("normalize").ok().map(|s| s.parse()).transpose()?,
            notes: take("notes").ok(),
        };
        if let Some(extra) = kv.keys().next() {
            return Err(Error::parse(path, 0, format!("unknown manifest key {extra:?}")));
        }
        if manifest.k == 0 {
            return Err(Error::parse(path, 0, "k must be a positive integer"));
        }
        Ok(manifest)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "name = {}\ntask = {}\nembeddings = {}\nlabels = {}\nk = {}\n",
            self.name,
            self.task,
            self.embeddings.display(),
            self.labels.display(),
            self.k
        );
        if let Some(m) = self.normalize {
            s += match m {
                NormalizeMode::Interpolate => "normalize = interpolate\n",
                NormalizeMode::DropTrailing => "normalize = drop_trailing\n",
            };
        }
        if let Some(n) = &self.notes {
            s += &format!("notes = {n}\n");
        }
        s
    }
}

/// Embeddings plus aligned ground truth, ready for clustering.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub task: TaskKind,
    pub embeddings: EmbeddingMatrix,
    pub labels: Vec<usize>,
    pub k: usize,
}

pub fn load_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    let embeddings = match manifest.normalize {
        None => load_embeddings(&manifest.embeddings),
        Some(mode) => load_ragged(&manifest.embeddings).and_then(|r| normalize_dims(&r, mode)),
    }
    .stage("embeddings")?;
    let label_set = load_labels(&manifest.labels).stage("labels")?;
    if label_set.len() != embeddings.len() {
        return Err(Error::invalid(format!(
            "{} embeddings but {} labels",
            embeddings.len(),
            label_set.len()
        )));
    }
    let labels = label_set.aligned_to(&embeddings.ids)?;
    if label_set.clusters() != manifest.k {
        return Err(Error::invalid(format!(
            "manifest says k = {} but the labels file has {} clusters",
            manifest.k,
            label_set.clusters()
        )));
    }
    Ok(Dataset {
        name: manifest.name.clone(),
        task: manifest.task,
        embeddings,
        labels,
        k: manifest.k,
    })
}
