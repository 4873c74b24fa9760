//! Small dense linear algebra: symmetric eigen-decomposition and Gram-Schmidt.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::Matrix;
use super::ops::dot;

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns of the second matrix.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_sq().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    (values, vectors)
}

/// Modified Gram-Schmidt over `vectors`, dropping any that are (nearly) dependent.
pub fn gram_schmidt(vectors: &[Vec<f64>], against: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        let norm0 = dot(&w, &w).sqrt();
        for _ in 0..2 {
            for b in against.iter().chain(basis.iter()) {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > 1e-10 * norm0.max(1.0) {
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
        }
    }
    basis
}

/// Extends `basis` (orthonormal) to `target` vectors using random Gaussian draws.
pub fn complete_orthonormal<R: Rng>(basis: &mut Vec<Vec<f64>>, dim: usize, target: usize, rng: &mut R) {
    while basis.len() < target {
        let cand: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let extra = gram_schmidt(&[cand], basis);
        basis.extend(extra);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = Matrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 1.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..3 {
            let col = vecs.column(k);
            let av: Vec<f64> = (0..3).map(|i| dot(a.row(i), &col)).collect();
            for i in 0..3 {
                assert!((av[i] - vals[k] * col[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_input_sorted() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 5.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a);
        assert_eq!(vals, vec![5.0, 1.0]);
        assert_eq!(vecs.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn completion_yields_orthonormal_set() {
        let mut rng = seeded(4);
        let mut basis = gram_schmidt(&[vec![1.0, 1.0, 0.0, 0.0]], &[]);
        complete_orthonormal(&mut basis, 4, 3, &mut rng);
        assert_eq!(basis.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&basis[i], &basis[j]) - expect).abs() < 1e-12);
            }
        }
    }
}
