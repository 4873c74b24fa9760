use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One training epoch of a deep-clustering model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total_loss: f64,
    pub reconstruction: f64,
    /// Weighted clustering KL term (P against Q, or refined against plain affinity).
    pub clustering: f64,
    /// Weighted second term (P against Z, or the basis regularizer).
    pub auxiliary: f64,
    /// `None` when fewer than two clusters were predicted.
    pub silhouette: Option<f64>,
    pub predicted_k: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
    /// Reconstruction loss per pretraining epoch.
    pub pretrain_loss: Vec<f64>,
    /// Free-form events, e.g. degenerate groups padded during initialization.
    pub notes: Vec<String>,
}

pub const TRACE_HEADER: &str = "epoch,total_loss,reconstruction,clustering,auxiliary,silhouette,predicted_k";

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn silhouettes(&self) -> Vec<Option<f64>> {
        self.epochs.iter().map(|e| e.silhouette).collect()
    }

    /// Epoch index with the highest silhouette; earliest wins ties.
    pub fn best_epoch(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.epochs.iter().enumerate() {
            if let Some(s) = e.silhouette {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Line-oriented CSV export; an empty silhouette field means undefined.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for e in &self.epochs {
            let sil = e.silhouette.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?},{},{}",
                e.epoch, e.total_loss, e.reconstruction, e.clustering, e.auxiliary, sil, e.predicted_k
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(epoch: usize, sil: Option<f64>) -> EpochRecord {
        EpochRecord {
            epoch,
            total_loss: 1.0,
            reconstruction: 0.5,
            clustering: 0.25,
            auxiliary: 0.25,
            silhouette: sil,
            predicted_k: 2,
        }
    }

    #[test]
    fn best_epoch_prefers_earliest_maximum() {
        let t = TrainTrace {
            epochs: vec![rec(0, Some(0.2)), rec(1, None), rec(2, Some(0.5)), rec(3, Some(0.5))],
            ..Default::default()
        };
        assert_eq!(t.best_epoch(), Some(2));
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(2).unwrap(), "1,1.0,0.5,0.25,0.25,,2");
    }
}
