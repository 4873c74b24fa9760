use serde::{Deserialize, Serialize};

use super::{acc, ari, cluster_stats, pair_counts, PairCounts};
use crate::error::Result;

/// Row names of the results tables, top to bottom.
pub const TABLE_ROWS: [&str; 8] = [
    "Ground-truth clusters",
    "Predicted clusters",
    "Mean cluster size",
    "Median cluster size",
    "Unary clusters",
    "Run time (S)",
    "ARI",
    "ACC",
];

/// Everything reported for one clustering run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ground_truth_clusters: usize,
    pub predicted_clusters: usize,
    pub mean_cluster_size: f64,
    pub median_cluster_size: f64,
    pub unary_clusters: usize,
    pub largest_cluster: usize,
    /// Wall-clock seconds of the clustering phase only.
    pub runtime_seconds: f64,
    pub ari: f64,
    pub acc: f64,
    pub pairs: PairCounts,
}

impl MetricsReport {
    pub fn evaluate(gt: &[usize], pred: &[usize], runtime_seconds: f64) -> Result<Self> {
        let gt_stats = cluster_stats(gt)?;
        let stats = cluster_stats(pred)?;
        Ok(MetricsReport {
            ground_truth_clusters: gt_stats.clusters,
            predicted_clusters: stats.clusters,
            mean_cluster_size: stats.mean_size,
            median_cluster_size: stats.median_size,
            unary_clusters: stats.unary,
            largest_cluster: stats.largest,
            runtime_seconds,
            ari: ari(gt, pred)?,
            acc: acc(gt, pred)?,
            pairs: pair_counts(gt, pred)?,
        })
    }

    /// Formatted values keyed by [`TABLE_ROWS`], in table order.
    pub fn table_record(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.ground_truth_clusters.to_string(),
            self.predicted_clusters.to_string(),
            format!("{:.2}", self.mean_cluster_size),
            format!("{:.1}", self.median_cluster_size),
            self.unary_clusters.to_string(),
            format!("{:.2}", self.runtime_seconds),
            format!("{:.2}", self.ari),
            format!("{:.2}", self.acc),
        ];
        TABLE_ROWS.iter().copied().zip(values).collect()
    }

    /// `key: value` lines, one per table row.
    pub fn to_key_value(&self) -> String {
        self.table_record()
            .into_iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_uses_table_row_names_in_order() {
        let r = MetricsReport::evaluate(&[0, 0, 1, 1], &[0, 0, 1, 2], 0.5).unwrap();
        let keys: Vec<_> = r.table_record().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, TABLE_ROWS);
        assert_eq!(r.predicted_clusters, 3);
        assert!(r.to_key_value().starts_with("Ground-truth clusters: 2\n"));
        assert!(r.to_key_value().ends_with("ACC: 0.75\n"));
    }
}
