//! Silhouette coefficient with Euclidean distance.
//!
//! Points in singleton clusters score 0. Inputs above [`EXACT_LIMIT`] items
//! are scored on a seeded uniform subsample of [`SAMPLE_SIZE`] items.

use std::collections::HashMap;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::numeric::ops::sq_dist;
use crate::numeric::rng::{self, streams};
use crate::numeric::Matrix;

pub const EXACT_LIMIT: usize = 5000;
pub const SAMPLE_SIZE: usize = 2048;

fn dense(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut map = HashMap::new();
    let ids: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    let mut sizes = vec![0; map.len()];
    for &i in &ids {
        sizes[i] += 1;
    }
    (ids, sizes)
}

/// Mean silhouette given a distance oracle `dist(i, j)`.
fn score(n: usize, labels: &[usize], mut dist: impl FnMut(usize, usize) -> f64) -> Result<f64> {
    let (ids, sizes) = dense(labels);
    if sizes.len() < 2 {
        return Err(Error::invalid("silhouette needs at least two clusters"));
    }
    let mut sums = vec![0.0; sizes.len()];
    let mut total = 0.0;
    for i in 0..n {
        let own = ids[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[ids[j]] += dist(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..sizes.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

fn check(n: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::shape(
            "silhouette",
            format!("{n} points but {} labels", labels.len()),
        ));
    }
    Ok(())
}

/// Exact silhouette over all points.
pub fn silhouette(x: &Matrix, labels: &[usize]) -> Result<f64> {
    check(x.rows(), labels)?;
    score(x.rows(), labels, |i, j| sq_dist(x.row(i), x.row(j)).sqrt())
}

/// Exact silhouette from a precomputed `N x N` distance matrix.
pub fn silhouette_from_dists(dists: &Matrix, labels: &[usize]) -> Result<f64> {
    if dists.rows() != dists.cols() {
        return Err(Error::shape("silhouette", "distance matrix must be square"));
    }
    check(dists.rows(), labels)?;
    score(dists.rows(), labels, |i, j| dists.get(i, j))
}

/// Exact up to [`EXACT_LIMIT`] items, otherwise over a seeded subsample.
pub fn silhouette_auto(x: &Matrix, labels: &[usize], seed: u64) -> Result<f64> {
    check(x.rows(), labels)?;
    if x.rows() <= EXACT_LIMIT {
        return silhouette(x, labels);
    }
    let mut rng = rng::stream(seed, streams::SILHOUETTE);
    let mut idx = index::sample(&mut rng, x.rows(), SAMPLE_SIZE).into_vec();
    idx.sort_unstable();
    let sub = x.select_rows(&idx);
    let sub_labels: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    silhouette(&sub, &sub_labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;
    use rand::Rng;

    #[test]
    fn two_tight_pairs() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [10.0], [10.1]]).unwrap();
        let s = silhouette(&x, &[0, 0, 1, 1]).unwrap();
        // a = 0.1, b = 10.05 for the outer points; 9.95 / 10.0 style for the inner
        assert!((s - 0.990).abs() < 1e-3, "{s}");
    }

    #[test]
    fn interleaved_labels_score_near_zero() {
        let x = Matrix::from_fn(40, 1, |i, _| i as f64);
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        assert!(silhouette(&x, &labels).unwrap().abs() < 0.05);
    }

    #[test]
    fn single_cluster_is_rejected() {
        let x = Matrix::zeros(3, 2);
        assert!(silhouette(&x, &[4, 4, 4]).is_err());
    }

    #[test]
    fn singletons_score_zero() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert_eq!(silhouette(&x, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn relabeling_does_not_change_score() {
        let mut rng = seeded(4);
        let x = Matrix::from_fn(30, 3, |_, _| rng.random::<f64>());
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let renamed: Vec<usize> = labels.iter().map(|&l| [9, 2, 5][l]).collect();
        assert_eq!(silhouette(&x, &labels).unwrap(), silhouette(&x, &renamed).unwrap());
    }

    #[test]
    fn matches_distance_matrix_route() {
        let mut rng = seeded(8);
        let x = Matrix::from_fn(25, 2, |_, _| rng.random::<f64>());
        let labels: Vec<usize> = (0..25).map(|i| (i * 7) % 4).collect();
        let d = Matrix::from_fn(25, 25, |i, j| sq_dist(x.row(i), x.row(j)).sqrt());
        let a = silhouette(&x, &labels).unwrap();
        let b = silhouette_from_dists(&d, &labels).unwrap();
        assert_eq!(a, b);
    }
}
