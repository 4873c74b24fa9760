//! Gaussian blob generator for tests and smoke runs.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numeric::ops::sq_dist;
use crate::numeric::rng::{self, streams};
use crate::numeric::Matrix;

const TRIES_PER_CENTER: usize = 1000;

/// `k` isotropic blobs with standard deviation `spread` and centers at least
/// `10 * spread` apart. Item `i` belongs to blob `i mod k`.
pub fn synth_blobs(n: usize, d: usize, k: usize, spread: f64, seed: u64) -> Result<(Matrix, Vec<usize>)> {
    if k == 0 || k > n || d == 0 {
        return Err(Error::invalid(format!("synth_blobs needs 1 <= k <= n and d >= 1 (n={n}, d={d}, k={k})")));
    }
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::invalid("spread must be finite and nonnegative"));
    }
    let mut rng = rng::stream(seed, streams::SYNTH);
    let unit = if spread > 0.0 { spread } else { 1.0 };
    let min_sep2 = (10.0 * spread).powi(2);
    // box wide enough that rejection sampling rarely fails; grows if it does
    let mut side = 20.0 * unit * (k as f64).powf(1.0 / d as f64).max(1.0);
    let centers = 'outer: loop {
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
        while centers.len() < k {
            let mut placed = false;
            for _ in 0..TRIES_PER_CENTER {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5) * side).collect();
                if centers.iter().all(|o| sq_dist(o, &c) >= min_sep2) {
                    centers.push(c);
                    placed = true;
                    break;
                }
            }
            if !placed {
                side *= 1.5;
                continue 'outer;
            }
        }
        break centers;
    };
    let noise = Normal::new(0.0, spread).map_err(|e| Error::invalid(e.to_string()))?;
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let x = Matrix::from_fn(n, d, |i, j| centers[labels[i]][j] + noise.sample(&mut rng));
    Ok((x, labels))
}
