//! Similarity kernels, KNN graphs and graph-convolution propagation.
//!
//! Adjacency is always stored sparse (CSR); `N` reaches tens of thousands of
//! items where an `N x N` dense matrix would dominate memory.

use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ops::{dot, sq_dist};
use crate::numeric::{activation, Activation, Matrix};

pub const DEFAULT_K: usize = 5;

/// Pairwise similarity used to pick neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-||a - b||^2 / t)`.
    Heat { t: f64 },
    /// `a . b`.
    Dot,
}

/// Kernel family as configured; the heat bandwidth may be left to the data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Heat,
    Dot,
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(KernelKind::Heat),
            "dot" => Ok(KernelKind::Dot),
            other => Err(Error::invalid(format!("unknown kernel {other:?}"))),
        }
    }
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Heat => "heat",
            KernelKind::Dot => "dot",
        }
    }

    /// Concrete kernel; a missing heat bandwidth defaults to the mean pairwise squared distance.
    pub fn resolve(self, x: &Matrix, t: Option<f64>) -> Result<Kernel> {
        match self {
            KernelKind::Dot => Ok(Kernel::Dot),
            KernelKind::Heat => {
                let t = t.unwrap_or_else(|| mean_pairwise_sq_dist(x));
                // identical points everywhere: any positive bandwidth gives S = 1
                let t = if t > 0.0 { t } else { 1.0 };
                Kernel::heat(t)
            }
        }
    }
}

impl Kernel {
    pub fn heat(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("heat kernel bandwidth must be positive, got {t}")));
        }
        Ok(Kernel::Heat { t })
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Heat { t } => (-sq_dist(a, b) / t).exp(),
            Kernel::Dot => dot(a, b),
        }
    }
}

/// Mean of `||x_i - x_j||^2` over ordered pairs `i != j`, via column variances.
pub fn mean_pairwise_sq_dist(x: &Matrix) -> f64 {
    let n = x.rows();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let means: Vec<f64> = x.column_sums().iter().map(|s| s / nf).collect();
    let mut total_var = 0.0;
    for row in x.row_iter() {
        total_var += sq_dist(row, &means);
    }
    total_var /= nf;
    2.0 * nf / (nf - 1.0) * total_var
}

fn similarity(x: &Matrix, kernel: Kernel) -> Matrix {
    let n = x.rows();
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(x.row(i), x.row(j));
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    s
}

pub fn heat_kernel_similarity(x: &Matrix, t: f64) -> Result<Matrix> {
    Ok(similarity(x, Kernel::heat(t)?))
}

pub fn dot_product_similarity(x: &Matrix) -> Matrix {
    similarity(x, Kernel::Dot)
}

/// Undirected graph with a self-loop on every node; neighbour lists sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnGraph {
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl KnnGraph {
    /// Builds from directed edges: union symmetrization plus self-loops.
    pub fn from_directed(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut lists: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (a, b) in edges {
            lists[a].push(b);
            lists[b].push(a);
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            indices.extend(l);
            indptr.push(indices.len());
        }
        KnnGraph { indptr, indices }
    }

    pub fn nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    /// Neighbours of `i` including `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges `(i, j)` with `i <= j`, self-loops included.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nodes()).flat_map(move |i| self.neighbors(i).iter().filter(move |&&j| j >= i).map(move |&j| (i, j)))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.nodes()).all(|i| self.neighbors(i).iter().all(|&j| self.has_edge(j, i)))
    }

    /// `i,j` lines, one per undirected edge, self-loops included.
    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (i, j) in self.edges() {
            writeln!(w, "{i},{j}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Indices of the `k` largest entries of `row` other than `self_idx`; lower index wins ties.
fn top_k(row: &[f64], self_idx: usize, k: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..row.len()).filter(|&j| j != self_idx).collect();
    let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    cand
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("KNN needs 1 <= k < N (k={k}, N={n})")));
    }
    Ok(())
}

/// KNN graph from a precomputed similarity matrix.
pub fn knn_graph(s: &Matrix, k: usize) -> Result<KnnGraph> {
    if s.rows() != s.cols() {
        return Err(Error::shape("knn_graph", "similarity matrix must be square"));
    }
    let n = s.rows();
    check_k(n, k)?;
    let edges = (0..n).flat_map(|i| top_k(s.row(i), i, k).into_iter().map(move |j| (i, j)));
    Ok(KnnGraph::from_directed(n, edges.collect::<Vec<_>>()))
}

/// KNN graph computed row by row from features, never materializing `N x N`.
///
/// Produces the same graph as `knn_graph` on the kernel's full similarity matrix.
pub fn knn_graph_from_features(x: &Matrix, kernel: Kernel, k: usize) -> Result<KnnGraph> {
    let n = x.rows();
    check_k(n, k)?;
    let mut edges = Vec::with_capacity(n * k);
    let mut row = vec![0.0; n];
    for i in 0..n {
        for (j, r) in row.iter_mut().enumerate() {
            *r = kernel.eval(x.row(i), x.row(j));
        }
        edges.extend(top_k(&row, i, k).into_iter().map(|j| (i, j)));
    }
    Ok(KnnGraph::from_directed(n, edges))
}

/// `D^{-1/2} A D^{-1/2}` over a graph that already carries self-loops, in CSR form.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_graph(g: &KnnGraph) -> Self {
        let n = g.nodes();
        let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / (g.neighbors(i).len() as f64).sqrt()).collect();
        let mut values = Vec::with_capacity(g.indices.len());
        for i in 0..n {
            for &j in g.neighbors(i) {
                values.push(inv_sqrt[i] * inv_sqrt[j]);
            }
        }
        NormalizedAdjacency {
            indptr: g.indptr.clone(),
            indices: g.indices.clone(),
            values,
        }
    }

    /// Self-loops only: the identity matrix.
    pub fn identity(n: usize) -> Self {
        Self::from_graph(&KnnGraph::from_directed(n, []))
    }

    pub fn nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.nodes();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for p in self.indptr[i]..self.indptr[i + 1] {
                m.set(i, self.indices[p], self.values[p]);
            }
        }
        m
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nodes() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                worst = worst.max((self.values[p] - self.get(self.indices[p], i)).abs());
            }
        }
        worst
    }

    /// Sparse-dense product `A m`. Since `A` is symmetric this also serves for `A^T m`.
    pub fn matmul(&self, m: &Matrix) -> Result<Matrix> {
        if m.rows() != self.nodes() {
            return Err(Error::shape(
                "adjacency product",
                format!("{} nodes against {} rows", self.nodes(), m.rows()),
            ));
        }
        let mut out = Matrix::zeros(self.nodes(), m.cols());
        for i in 0..self.nodes() {
            let dst = out.row_mut(i);
            for p in self.indptr[i]..self.indptr[i + 1] {
                let a = self.values[p];
                for (d, s) in dst.iter_mut().zip(m.row(self.indices[p])) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }
}

/// `activation(A (features W))`.
pub fn gcn_propagate(adj: &NormalizedAdjacency, features: &Matrix, weights: &Matrix, act: Activation) -> Result<Matrix> {
    if features.cols() != weights.rows() {
        return Err(Error::shape(
            "gcn_propagate",
            format!("features have {} columns, weights {} rows", features.cols(), weights.rows()),
        ));
    }
    let support = features.matmul(weights)?;
    Ok(activation(&adj.matmul(&support)?, act))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = seeded(seed);
        Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn heat_kernel_examples() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]).unwrap();
        let s = heat_kernel_similarity(&x, 2.0).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert!((s.get(0, 2) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(heat_kernel_similarity(&x, 0.0).is_err());

        let x = random(4, 3, 1);
        let s = heat_kernel_similarity(&x, 0.7).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut d = 0.0;
                for c in 0..3 {
                    d += (x.get(i, c) - x.get(j, c)).powi(2);
                }
                assert!((s.get(i, j) - (-d / 0.7).exp()).abs() < 1e-15);
                assert!(s.get(i, j) > 0.0 && s.get(i, j) <= 1.0);
            }
        }
    }

    #[test]
    fn dot_examples() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = dot_product_similarity(&x);
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(0, 2), 1.0);
        let y = Matrix::from_rows(&[[0.5, -2.0, 3.0], [4.0, 1.0, -1.0]]).unwrap();
        assert_eq!(dot_product_similarity(&y).get(0, 1), 2.0 - 2.0 - 3.0);
    }

    #[test]
    fn mean_pairwise_matches_brute_force() {
        let x = random(7, 3, 2);
        let mut total = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    total += sq_dist(x.row(i), x.row(j));
                }
            }
        }
        assert!((mean_pairwise_sq_dist(&x) - total / 42.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_k1() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let g = knn_graph(&heat_kernel_similarity(&x, 1.0).unwrap(), 1).unwrap();
        assert_eq!(g.neighbors(0), &[0, 1]);
        assert_eq!(g.neighbors(1), &[0, 1, 2]);
        assert_eq!(g.neighbors(2), &[1, 2]);
        assert!(g.is_symmetric());
    }

    #[test]
    fn full_k_gives_complete_graph() {
        let x = random(5, 2, 3);
        let g = knn_graph(&dot_product_similarity(&x), 4).unwrap();
        for i in 0..5 {
            assert_eq!(g.neighbors(i), &[0, 1, 2, 3, 4]);
        }
        assert!(knn_graph(&dot_product_similarity(&x), 5).is_err());
        assert!(knn_graph(&dot_product_similarity(&x), 0).is_err());
    }

    #[test]
    fn duplicates_break_ties_toward_lower_index() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [0.0], [5.0]]).unwrap();
        let g = knn_graph(&heat_kernel_similarity(&x, 1.0).unwrap(), 1).unwrap();
        // node 0 picks 1; nodes 1 and 2 pick 0; node 3 picks 0 (all equal, lowest index)
        assert_eq!(g.neighbors(0), &[0, 1, 2, 3]);
        assert_eq!(g.neighbors(1), &[0, 1]);
        assert_eq!(g.neighbors(2), &[0, 2]);
    }

    #[test]
    fn streaming_matches_dense() {
        let x = random(40, 3, 4);
        let k = Kernel::heat(0.5).unwrap();
        assert_eq!(
            knn_graph_from_features(&x, k, 5).unwrap(),
            knn_graph(&heat_kernel_similarity(&x, 0.5).unwrap(), 5).unwrap()
        );
        assert_eq!(
            knn_graph_from_features(&x, Kernel::Dot, 3).unwrap(),
            knn_graph(&dot_product_similarity(&x), 3).unwrap()
        );
    }

    #[test]
    fn path_graph_normalization() {
        let g = KnnGraph::from_directed(3, [(0, 1), (1, 2)]);
        let a = NormalizedAdjacency::from_graph(&g).to_dense();
        let r6 = 1.0 / 6f64.sqrt();
        let want = [[0.5, r6, 0.0], [r6, 1.0 / 3.0, r6], [0.0, r6, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
        let f = Matrix::from_rows(&[[1.0], [2.0], [4.0]]).unwrap();
        let out = gcn_propagate(&NormalizedAdjacency::from_graph(&g), &f, &Matrix::identity(1), Activation::Linear).unwrap();
        assert!((out.get(0, 0) - (0.5 + 2.0 * r6)).abs() < 1e-15);
        assert!((out.get(1, 0) - (r6 + 2.0 / 3.0 + 4.0 * r6)).abs() < 1e-15);
    }

    #[test]
    fn identity_adjacency_is_plain_affine() {
        let f = random(4, 3, 5);
        let w = random(3, 2, 6);
        let out = gcn_propagate(&NormalizedAdjacency::identity(4), &f, &w, Activation::Relu).unwrap();
        assert_eq!(out, f.matmul(&w).unwrap().map(|v| v.max(0.0)));
    }

    #[test]
    fn two_node_complete_graph_equal_rows() {
        let g = KnnGraph::from_directed(2, [(0, 1)]);
        let f = Matrix::filled(2, 3, 0.7);
        let out = gcn_propagate(&NormalizedAdjacency::from_graph(&g), &f, &random(3, 2, 7), Activation::Sigmoid).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn edge_list_dump() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("edges.csv");
        KnnGraph::from_directed(3, [(2, 0)]).write_edge_list(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "0,0\n0,2\n1,1\n2,2\n");
    }

    proptest! {
        #[test]
        fn knn_invariants(pts in prop::collection::vec(-10.0f64..10.0, 24), k in 1usize..7, seed in 0u64..1000) {
            let x = Matrix::from_vec(12, 2, pts).unwrap();
            let s = heat_kernel_similarity(&x, 3.0).unwrap();
            let g = knn_graph(&s, k).unwrap();
            prop_assert!(g.is_symmetric());
            for i in 0..12 {
                prop_assert!(g.has_edge(i, i));
                prop_assert!(g.neighbors(i).len() > k);
            }
            let a = NormalizedAdjacency::from_graph(&g);
            prop_assert!(a.asymmetry() <= 1e-12);
            prop_assert!(a.to_dense().as_slice().iter().all(|&v| v >= 0.0));

            // consistent relabeling permutes the graph
            let mut perm: Vec<usize> = (0..12).collect();
            let mut rng = seeded(seed);
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let xp = x.select_rows(&perm);
            let has_ties = (0..12).any(|i| (0..12).any(|j| (0..12).any(|l| j != l && j != i && l != i && s.get(i, j) == s.get(i, l))));
            prop_assume!(!has_ties);
            let gp = knn_graph(&heat_kernel_similarity(&xp, 3.0).unwrap(), k).unwrap();
            for a in 0..12 {
                for b in 0..12 {
                    prop_assert_eq!(gp.has_edge(a, b), g.has_edge(perm[a], perm[b]));
                }
            }
        }
    }
}
