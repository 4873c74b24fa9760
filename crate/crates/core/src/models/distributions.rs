//! Soft assignment operators shared by the trainers.

use crate::error::{Error, Result};
use crate::numeric::ops::sq_dist;
use crate::numeric::{Matrix, SoftAssignments};

use super::edesc::SubspaceBases;

/// Student-t kernel assignments `q_ij ∝ (1 + ||h_i - mu_j||^2 / v)^(-(v+1)/2)`.
pub fn soft_assignment_q(h: &Matrix, centers: &Matrix, v: f64) -> Result<SoftAssignments> {
    if centers.rows() < 2 {
        return Err(Error::invalid("soft assignment needs at least two centers"));
    }
    if h.cols() != centers.cols() {
        return Err(Error::shape(
            "soft_assignment_q",
            format!("latent width {} vs center width {}", h.cols(), centers.cols()),
        ));
    }
    if !(v > 0.0) {
        return Err(Error::invalid("Student-t degrees of freedom must be positive"));
    }
    let k = centers.rows();
    let power = -(v + 1.0) / 2.0;
    let m = Matrix::from_fn(h.rows(), k, |i, j| (1.0 + sq_dist(h.row(i), centers.row(j)) / v).powf(power));
    Ok(SoftAssignments::from_unnormalized(m))
}

/// Sharpened target `p_ij ∝ q_ij^2 / f_j` with cluster frequency `f_j = sum_i q_ij`.
pub fn target_distribution_p(q: &SoftAssignments) -> SoftAssignments {
    let qm = q.matrix();
    let f = qm.column_sums();
    let m = Matrix::from_fn(qm.rows(), qm.cols(), |i, j| {
        let v = qm.get(i, j);
        if v == 0.0 {
            0.0
        } else {
            v * v / f[j]
        }
    });
    SoftAssignments::from_unnormalized(m)
}

/// Raw affinities `a_ij = ||D_j^T h_i||^2 + eta * d_sub` and the projections `H D`.
pub(crate) fn raw_affinity(h: &Matrix, bases: &SubspaceBases, eta: f64) -> Result<(Matrix, Matrix)> {
    let hd = h.matmul(&bases.d)?;
    let (k, ds) = (bases.k, bases.d_sub);
    let smooth = eta * ds as f64;
    let a = Matrix::from_fn(h.rows(), k, |i, j| {
        hd.row(i)[j * ds..(j + 1) * ds].iter().map(|v| v * v).sum::<f64>() + smooth
    });
    Ok((a, hd))
}

/// Subspace affinity: row-normalized projection energy onto each basis block.
pub fn subspace_affinity(h: &Matrix, bases: &SubspaceBases, eta: f64) -> Result<SoftAssignments> {
    if !(eta > 0.0) {
        return Err(Error::invalid("affinity smoothing eta must be positive"));
    }
    if h.cols() != bases.d.rows() {
        return Err(Error::shape(
            "subspace_affinity",
            format!("latent width {} vs basis height {}", h.cols(), bases.d.rows()),
        ));
    }
    Ok(SoftAssignments::from_unnormalized(raw_affinity(h, bases, eta)?.0))
}

/// Refined affinity: the same sharpening as [`target_distribution_p`].
pub fn refined_affinity(s: &SoftAssignments) -> SoftAssignments {
    target_distribution_p(s)
}
