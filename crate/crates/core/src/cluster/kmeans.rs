//! Lloyd's K-means with k-means++ seeding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ClusteringResult;
use crate::error::{Error, Result};
use crate::numeric::ops::sq_dist;
use crate::numeric::rng::{self, streams};
use crate::numeric::{Matrix, Trans};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMeansInit {
    #[serde(rename = "kmeans++")]
    PlusPlus,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
    pub seed: u64,
    pub init: KMeansInit,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iter: 300,
            tol: 1e-6,
            seed,
            init: KMeansInit::PlusPlus,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansFit {
    /// Raw cluster ids in `0..k`; may skip ids if a cluster ended empty.
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    /// Inertia after every assignment step, in order.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap_or(&0.0)
    }
}

pub fn kmeans(x: &Matrix, config: &KMeansConfig) -> Result<ClusteringResult> {
    Ok(ClusteringResult::from_raw_labels(&kmeans_fit(x, config)?.labels))
}

pub fn kmeans_fit(x: &Matrix, config: &KMeansConfig) -> Result<KMeansFit> {
    let n = x.rows();
    if config.k == 0 || config.max_iter == 0 {
        return Err(Error::invalid("k-means needs k >= 1 and max_iter >= 1"));
    }
    if config.k > n {
        return Err(Error::invalid(format!(
            "k-means asked for {} clusters but only {n} points are available",
            config.k
        )));
    }
    let mut rng = rng::stream(config.seed, streams::KMEANS);
    let mut centroids = match config.init {
        KMeansInit::PlusPlus => plus_plus(x, config.k, &mut rng),
        KMeansInit::Random => {
            let idx = rand::seq::index::sample(&mut rng, n, config.k).into_vec();
            x.select_rows(&idx)
        }
    };

    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        let (labels, inertia) = assign(x, &centroids)?;
        history.push(inertia);
        let updated = update_centroids(x, &labels, &centroids);
        let shift = (0..config.k)
            .map(|j| sq_dist(updated.row(j), centroids.row(j)).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < config.tol {
            break;
        }
    }
    let (labels, inertia) = assign(x, &centroids)?;
    history.push(inertia);
    Ok(KMeansFit {
        labels,
        centroids,
        inertia_history: history,
        iterations,
    })
}

fn plus_plus<R: Rng>(x: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = x.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // guard against rounding landing on an already chosen point
            if d2[pick] == 0.0 {
                pick = d2.iter().position(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // all remaining points coincide with chosen centers
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    x.select_rows(&chosen)
}

/// Nearest-centroid labels (first index on ties) and exact inertia.
pub(crate) fn assign(x: &Matrix, centroids: &Matrix) -> Result<(Vec<usize>, f64)> {
    let k = centroids.rows();
    // ||x||^2 - 2 x.c + ||c||^2 via one product; ||x||^2 is constant per row
    let cross = x.matmul_t(Trans::No, centroids, Trans::Yes)?;
    let c_norms: Vec<f64> = centroids.row_iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut labels = Vec::with_capacity(x.rows());
    let mut inertia = 0.0;
    for i in 0..x.rows() {
        let row = cross.row(i);
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for j in 0..k {
            let v = c_norms[j] - 2.0 * row[j];
            if v < best_val {
                best_val = v;
                best = j;
            }
        }
        labels.push(best);
        inertia += sq_dist(x.row(i), centroids.row(best));
    }
    Ok((labels, inertia))
}

/// Cluster means; an empty cluster takes the point farthest from its own centroid.
fn update_centroids(x: &Matrix, labels: &[usize], previous: &Matrix) -> Matrix {
    let k = previous.rows();
    let d = x.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut labels = labels.to_vec();
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = (0..x.rows())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, sq_dist(x.row(i), previous.row(labels[i]))))
            .fold(None, |best: Option<(usize, f64)>, (i, dist)| match best {
                Some((_, bd)) if bd >= dist => best,
                _ => Some((i, dist)),
            });
        if let Some((i, _)) = far {
            let old = labels[i];
            counts[old] -= 1;
            for (s, v) in sums.row_mut(old).iter_mut().zip(x.row(i)) {
                *s -= v;
            }
            labels[i] = j;
            counts[j] = 1;
            sums.row_mut(j).copy_from_slice(x.row(i));
        }
    }
    for j in 0..k {
        if counts[j] == 0 {
            sums.row_mut(j).copy_from_slice(previous.row(j));
        } else {
            let c = counts[j] as f64;
            sums.row_mut(j).iter_mut().for_each(|v| *v /= c);
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;
    use crate::metrics::ari;

    #[test]
    fn two_points_two_clusters() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [5.0, -2.0]]).unwrap();
        let fit = kmeans_fit(&x, &KMeansConfig::new(2, 1)).unwrap();
        assert_ne!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.inertia(), 0.0);
    }

    #[test]
    fn rejects_more_clusters_than_points() {
        let x = Matrix::zeros(3, 2);
        assert!(kmeans(&x, &KMeansConfig::new(4, 0)).is_err());
    }

    #[test]
    fn blobs_are_recovered() {
        let (x, gt) = synth_blobs(500, 10, 5, 1.0, 7).unwrap();
        let r = kmeans(&x, &KMeansConfig::new(5, 7)).unwrap();
        assert!(ari(&gt, &r.labels).unwrap() >= 0.95);
    }

    #[test]
    fn inertia_never_increases_and_labels_are_nearest() {
        let (x, _) = synth_blobs(120, 3, 4, 4.0, 2).unwrap();
        for init in [KMeansInit::PlusPlus, KMeansInit::Random] {
            let cfg = KMeansConfig {
                init,
                ..KMeansConfig::new(6, 3)
            };
            let fit = kmeans_fit(&x, &cfg).unwrap();
            for w in fit.inertia_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{:?}", fit.inertia_history);
            }
            for i in 0..x.rows() {
                let own = sq_dist(x.row(i), fit.centroids.row(fit.labels[i]));
                for j in 0..6 {
                    assert!(own <= sq_dist(x.row(i), fit.centroids.row(j)) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0], [2.0]]).unwrap();
        let r = kmeans(&x, &KMeansConfig::new(3, 0)).unwrap();
        assert!(r.k_predicted <= 3);
        assert_eq!(r.labels[0], r.labels[1]);
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, _) = synth_blobs(90, 4, 3, 2.0, 5).unwrap();
        let a = kmeans_fit(&x, &KMeansConfig::new(3, 11)).unwrap();
        let b = kmeans_fit(&x, &KMeansConfig::new(3, 11)).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.centroids, b.centroids);
    }
}
