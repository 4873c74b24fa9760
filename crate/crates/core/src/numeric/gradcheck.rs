//! Central-difference gradient verification.

use rand::seq::index;

use super::rng::seeded;

/// Gradients smaller than this are compared in absolute rather than relative terms.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// Compares `analytic` against `(f(θ+ε) - f(θ-ε)) / 2ε`.
///
/// `indices` restricts the check to a subset of coordinates (all when `None`).
/// The error at coordinate `k` is `|a_k - n_k| / max(|n_k|, RELATIVE_FLOOR)`;
/// the maximum over checked coordinates is returned.
pub fn finite_diff_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    epsilon: f64,
    indices: Option<&[usize]>,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert_eq!(params.len(), analytic.len());
    let all: Vec<usize>;
    let indices = match indices {
        Some(ix) => ix,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    let mut theta = params.to_vec();
    let mut worst = 0.0f64;
    for &k in indices {
        let orig = theta[k];
        theta[k] = orig + epsilon;
        let up = loss(&theta);
        theta[k] = orig - epsilon;
        let down = loss(&theta);
        theta[k] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let err = (analytic[k] - numeric).abs() / numeric.abs().max(RELATIVE_FLOOR);
        worst = worst.max(err);
    }
    worst
}

/// Deterministic sample of at most `max` distinct coordinates, sorted.
pub fn sample_indices(len: usize, max: usize, seed: u64) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let mut rng = seeded(seed);
    let mut ix = index::sample(&mut rng, len, max).into_vec();
    ix.sort_unstable();
    ix
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_norm(p: &[f64]) -> f64 {
        p.iter().map(|v| v * v).sum()
    }

    #[test]
    fn quadratic_at_one() {
        let err = finite_diff_check(sq_norm, &[1.0], &[2.0], 1e-5, None);
        assert!(err < 1e-9);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let theta = [1.0, -0.5, 2.0];
        let doubled: Vec<f64> = theta.iter().map(|v| 2.0 * 2.0 * v).collect();
        let err = finite_diff_check(sq_norm, &theta, &doubled, 1e-5, None);
        assert!((err - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let a = sample_indices(1000, 50, 9);
        assert_eq!(a, sample_indices(1000, 50, 9));
        assert_eq!(a.len(), 50);
        assert_eq!(sample_indices(10, 50, 9), (0..10).collect::<Vec<_>>());
    }
}
