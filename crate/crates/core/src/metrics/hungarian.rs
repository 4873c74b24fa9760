//! Minimum-cost perfect assignment (Kuhn-Munkres with potentials, O(K^3)).
//!
//! Among all optimal assignments the lexicographically smallest one (by the
//! column assigned to row 0, then row 1, ...) is returned, so ties resolve
//! the same way on every run.

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Optimal assignment: `row_to_col[i]` is the column given to row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

/// Pads a rectangular matrix to square with `fill`.
pub fn pad_square(cost: &Matrix, fill: f64) -> Matrix {
    let n = cost.rows().max(cost.cols());
    Matrix::from_fn(n, n, |i, j| {
        if i < cost.rows() && j < cost.cols() {
            cost.get(i, j)
        } else {
            fill
        }
    })
}

pub fn hungarian(cost: &Matrix) -> Result<Assignment> {
    let n = cost.rows();
    if n != cost.cols() {
        return Err(Error::shape(
            "hungarian",
            format!("cost matrix is {}x{}; pad it to square first", n, cost.cols()),
        ));
    }
    if !cost.is_finite() {
        return Err(Error::invalid("hungarian: cost matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(Assignment {
            row_to_col: Vec::new(),
            cost: 0.0,
        });
    }

    // 1-based potentials formulation; index 0 is a virtual column.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[col_row[j] - 1] = j - 1;
    }

    let scale = cost
        .as_slice()
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(1.0);
    let tol = 1e-9 * scale;
    // Edges with zero reduced cost; every optimal assignment uses only these.
    let tight = |i: usize, j: usize| (cost.get(i, j) - u[i + 1] - v[j + 1]).abs() <= tol;
    lexicographic_refine(n, &tight, &mut row_to_col);

    let total = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| cost.get(i, j))
        .sum();
    Ok(Assignment {
        row_to_col,
        cost: total,
    })
}

/// Rewrites a perfect matching in the tight graph into the lexicographically
/// smallest one, fixing rows in order. Each row costs one O(n^2) search.
fn lexicographic_refine(n: usize, tight: &dyn Fn(usize, usize) -> bool, row_to_col: &mut [usize]) {
    let mut col_to_row = vec![0usize; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut fixed = vec![false; n];
    for i in 0..n {
        let target = row_to_col[i];
        // Rows that can reach column `target` by an alternating path
        // (non-matching tight edge, then matching edge) over unfixed rows.
        // `next_col[r]` is the column row r moves to on that path.
        let mut good = vec![false; n];
        let mut next_col = vec![usize::MAX; n];
        let mut queue = vec![target];
        while let Some(c) = queue.pop() {
            for r in 0..n {
                if fixed[r] || r == i || good[r] || row_to_col[r] == c || !tight(r, c) {
                    continue;
                }
                good[r] = true;
                next_col[r] = c;
                queue.push(row_to_col[r]);
            }
        }
        let mut choice = target;
        for j in 0..n {
            if j == target {
                break;
            }
            let r = col_to_row[j];
            if !fixed[r] && good[r] && tight(i, j) {
                choice = j;
                break;
            }
        }
        if choice != target {
            // Rotate along the cycle i -> choice -> r -> next_col[r] -> ... -> target.
            let mut r = col_to_row[choice];
            row_to_col[i] = choice;
            col_to_row[choice] = i;
            loop {
                let c = next_col[r];
                row_to_col[r] = c;
                let displaced = col_to_row[c];
                col_to_row[c] = r;
                if c == target {
                    break;
                }
                r = displaced;
            }
        }
        fixed[i] = true;
    }
}
