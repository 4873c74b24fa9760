//! External clustering validation: contingency tables, ARI, Hungarian-mapped
//! accuracy, pair-level confusion counts and cluster-shape statistics.
//!
//! ARI is reported over its true range `[-1, 1]`; small negative values are
//! legitimate (worse-than-chance agreement) and are never clamped.

mod hungarian;
mod report;

pub use hungarian::{hungarian, pad_square, Assignment};
pub use report::{MetricsReport, TABLE_ROWS};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Overlap counts between ground-truth groups (rows) and predicted groups (columns).
///
/// Groups are indexed in order of first appearance in the respective labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

fn check_lengths(op: &'static str, gt: &[usize], pred: &[usize]) -> Result<()> {
    if gt.len() != pred.len() {
        return Err(Error::shape(
            op,
            format!("ground truth has {} labels, prediction {}", gt.len(), pred.len()),
        ));
    }
    Ok(())
}

pub fn contingency(gt: &[usize], pred: &[usize]) -> Result<ContingencyTable> {
    check_lengths("contingency", gt, pred)?;
    let (g, r) = dense_ids(gt);
    let (p, s) = dense_ids(pred);
    let mut counts = vec![vec![0u64; s]; r];
    for (&i, &j) in g.iter().zip(&p) {
        counts[i][j] += 1;
    }
    let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
    let col_sums = (0..s).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        n: gt.len() as u64,
    })
}

#[inline]
fn comb2(x: u64) -> u128 {
    let x = x as u128;
    x * x.saturating_sub(1) / 2
}

/// Adjusted Rand index over the contingency table.
pub fn ari(gt: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths("ari", gt, pred)?;
    if gt.len() < 2 {
        return Err(Error::invalid("ARI needs at least two items"));
    }
    let t = contingency(gt, pred)?;
    let index: u128 = t.counts.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_a: u128 = t.row_sums.iter().map(|&a| comb2(a)).sum();
    let sum_b: u128 = t.col_sums.iter().map(|&b| comb2(b)).sum();
    let total = comb2(t.n) as f64;
    let expected = sum_a as f64 * sum_b as f64 / total;
    let max_index = 0.5 * (sum_a as f64 + sum_b as f64);
    if sum_a == sum_b && (sum_a == 0 || sum_a == comb2(t.n)) {
        // Both labelings are the same trivial partition (all singletons or one block).
        return Ok(1.0);
    }
    Ok((index as f64 - expected) / (max_index - expected))
}

/// Unordered item pairs classified by co-membership in ground truth and prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// ARI through the pair-counting identity.
    pub fn ari(&self) -> f64 {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let denom = (tp + fn_) * (fn_ + tn) + (tp + fp) * (fp + tn);
        if denom == 0.0 {
            return 1.0;
        }
        2.0 * (tp * tn - fn_ * fp) / denom
    }
}

pub fn pair_counts(gt: &[usize], pred: &[usize]) -> Result<PairCounts> {
    let t = contingency(gt, pred)?;
    let tp: u128 = t.counts.iter().flatten().map(|&c| comb2(c)).sum();
    let same_gt: u128 = t.row_sums.iter().map(|&a| comb2(a)).sum();
    let same_pred: u128 = t.col_sums.iter().map(|&b| comb2(b)).sum();
    let all = comb2(t.n);
    let fn_ = same_gt - tp;
    let fp = same_pred - tp;
    let tn = all - tp - fn_ - fp;
    Ok(PairCounts {
        tp: tp as u64,
        fp: fp as u64,
        tn: tn as u64,
        fn_: fn_ as u64,
    })
}

/// Accuracy under the best one-to-one mapping of predicted to ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct AccResult {
    pub acc: f64,
    /// `mapping[p]` is the ground-truth group (first-appearance index) assigned
    /// to predicted group `p`, or `None` when it was matched to padding.
    pub mapping: Vec<Option<usize>>,
}

pub fn acc(gt: &[usize], pred: &[usize]) -> Result<f64> {
    Ok(acc_with_mapping(gt, pred)?.acc)
}

/// ACC plus the optimal mapping; unequal cluster counts are zero-padded.
pub fn acc_with_mapping(gt: &[usize], pred: &[usize]) -> Result<AccResult> {
    check_lengths("acc", gt, pred)?;
    if gt.is_empty() {
        return Err(Error::invalid("ACC needs at least one item"));
    }
    let t = contingency(gt, pred)?;
    let (r, s) = (t.row_sums.len(), t.col_sums.len());
    // rows: predicted groups, columns: ground-truth groups; minimise negated overlap
    let benefit = Matrix::from_fn(s, r, |p, g| t.counts[g][p] as f64);
    let cost = pad_square(&benefit, 0.0).map(|b| -b);
    let assignment = hungarian(&cost)?;
    let mut matched = 0u64;
    let mut mapping = Vec::with_capacity(s);
    for p in 0..s {
        let g = assignment.row_to_col[p];
        if g < r {
            matched += t.counts[g][p];
            mapping.push(Some(g));
        } else {
            mapping.push(None);
        }
    }
    Ok(AccResult {
        acc: matched as f64 / t.n as f64,
        mapping,
    })
}

/// Shape statistics over the nonempty clusters of one labeling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub clusters: usize,
    pub mean_size: f64,
    pub median_size: f64,
    pub unary: usize,
    pub largest: usize,
}

pub fn cluster_stats(labels: &[usize]) -> Result<ClusterStats> {
    if labels.is_empty() {
        return Err(Error::invalid("cluster statistics need at least one label"));
    }
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    let mut sizes: Vec<usize> = sizes.into_values().collect();
    sizes.sort_unstable();
    let k = sizes.len();
    let median_size = if k % 2 == 1 {
        sizes[k / 2] as f64
    } else {
        (sizes[k / 2 - 1] + sizes[k / 2]) as f64 / 2.0
    };
    Ok(ClusterStats {
        clusters: k,
        mean_size: labels.len() as f64 / k as f64,
        median_size,
        unary: sizes.iter().filter(|&&s| s == 1).count(),
        largest: *sizes.last().unwrap(),
    })
}
