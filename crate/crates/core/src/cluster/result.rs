use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Hard clustering of `N` items.
///
/// Labels are dense: every id in `0..k_predicted` is used by at least one item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub k_predicted: usize,
    /// Wall-clock seconds of the clustering phase; zero when not measured.
    pub runtime_seconds: f64,
}

impl ClusteringResult {
    /// Renumbers arbitrary cluster ids densely in order of first appearance.
    pub fn from_raw_labels(raw: &[usize]) -> Self {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        ClusteringResult {
            labels,
            k_predicted: map.len(),
            runtime_seconds: 0.0,
        }
    }

    pub fn with_runtime(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
