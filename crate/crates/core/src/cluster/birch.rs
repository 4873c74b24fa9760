//! Birch: a single-pass CF-tree build followed by a global Ward-style
//! agglomeration of the leaf subclusters down to `K` groups.
//!
//! A clustering feature (CF) is the triple `(N, LS, SS)`: point count, linear
//! sum and sum of squared norms. CFs are additive, so a parent entry always
//! equals the sum of its child node's entries.

use rand::seq::index;

use super::ClusteringResult;
use crate::error::{Error, Result};
use crate::numeric::ops::sq_dist;
use crate::numeric::rng::{self, streams};
use crate::numeric::Matrix;

pub const DEFAULT_BRANCHING: usize = 50;
const PILOT_SAMPLE: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringFeature {
    pub n: usize,
    pub ls: Vec<f64>,
    pub ss: f64,
}

impl ClusteringFeature {
    pub fn from_point(p: &[f64]) -> Self {
        ClusteringFeature {
            n: 1,
            ls: p.to_vec(),
            ss: p.iter().map(|v| v * v).sum(),
        }
    }

    fn empty(dim: usize) -> Self {
        ClusteringFeature {
            n: 0,
            ls: vec![0.0; dim],
            ss: 0.0,
        }
    }

    pub fn merge(&mut self, other: &ClusteringFeature) {
        self.n += other.n;
        self.ls.iter_mut().zip(&other.ls).for_each(|(a, b)| *a += b);
        self.ss += other.ss;
    }

    pub fn merged(&self, other: &ClusteringFeature) -> ClusteringFeature {
        let mut m = self.clone();
        m.merge(other);
        m
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.ls.iter().map(|v| v / n).collect()
    }

    /// Root-mean-square distance of member points to the centroid.
    pub fn radius(&self) -> f64 {
        let n = self.n as f64;
        let c2: f64 = self.ls.iter().map(|v| (v / n) * (v / n)).sum();
        (self.ss / n - c2).max(0.0).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct CfEntry {
    pub cf: ClusteringFeature,
    pub child: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct CfNode {
    pub leaf: bool,
    pub entries: Vec<CfEntry>,
}

/// Height-balanced CF tree stored as an arena of nodes.
#[derive(Clone, Debug)]
pub struct CfTree {
    pub branching: usize,
    pub threshold: f64,
    pub nodes: Vec<CfNode>,
    pub root: usize,
    dim: usize,
}

impl CfTree {
    pub fn new(dim: usize, branching: usize, threshold: f64) -> Result<Self> {
        if branching < 2 {
            return Err(Error::invalid("Birch branching factor must be at least 2"));
        }
        if !(threshold >= 0.0) {
            return Err(Error::invalid("Birch threshold must be nonnegative"));
        }
        Ok(CfTree {
            branching,
            threshold,
            nodes: vec![CfNode {
                leaf: true,
                entries: Vec::new(),
            }],
            root: 0,
            dim,
        })
    }

    pub fn build(x: &Matrix, branching: usize, threshold: f64) -> Result<Self> {
        let mut tree = CfTree::new(x.cols(), branching, threshold)?;
        for row in x.row_iter() {
            tree.insert(row);
        }
        Ok(tree)
    }

    pub fn insert(&mut self, point: &[f64]) {
        let cf = ClusteringFeature::from_point(point);
        if let Some(sibling) = self.insert_at(self.root, &cf) {
            let old = self.root;
            let entries = vec![
                CfEntry {
                    cf: self.node_cf(old),
                    child: Some(old),
                },
                CfEntry {
                    cf: self.node_cf(sibling),
                    child: Some(sibling),
                },
            ];
            self.nodes.push(CfNode {
                leaf: false,
                entries,
            });
            self.root = self.nodes.len() - 1;
        }
    }

    /// Inserts into the subtree at `node`; returns a new sibling if `node` split.
    fn insert_at(&mut self, node: usize, cf: &ClusteringFeature) -> Option<usize> {
        let closest = closest_entry(&self.nodes[node].entries, &cf.ls, cf.n);
        if self.nodes[node].leaf {
            let threshold = self.threshold;
            let entries = &mut self.nodes[node].entries;
            match closest {
                Some(i) if entries[i].cf.merged(cf).radius() <= threshold => {
                    entries[i].cf.merge(cf);
                }
                _ => entries.push(CfEntry {
                    cf: cf.clone(),
                    child: None,
                }),
            }
        } else {
            let i = closest.expect("internal CF node without entries");
            let child = self.nodes[node].entries[i].child.expect("internal entry without child");
            match self.insert_at(child, cf) {
                None => self.nodes[node].entries[i].cf.merge(cf),
                Some(sibling) => {
                    self.nodes[node].entries[i].cf = self.node_cf(child);
                    let sib_cf = self.node_cf(sibling);
                    self.nodes[node].entries.push(CfEntry {
                        cf: sib_cf,
                        child: Some(sibling),
                    });
                }
            }
        }
        if self.nodes[node].entries.len() > self.branching {
            Some(self.split(node))
        } else {
            None
        }
    }

    /// Splits around the farthest pair of entries; the new node is returned.
    fn split(&mut self, node: usize) -> usize {
        let entries = std::mem::take(&mut self.nodes[node].entries);
        let centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.cf.centroid()).collect();
        let (mut a, mut b, mut far) = (0, 1, -1.0);
        for i in 0..centroids.len() {
            for j in (i + 1)..centroids.len() {
                let d = sq_dist(&centroids[i], &centroids[j]);
                if d > far {
                    (a, b, far) = (i, j, d);
                }
            }
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, e) in entries.into_iter().enumerate() {
            let to_left = if i == a {
                true
            } else if i == b {
                false
            } else {
                sq_dist(&centroids[i], &centroids[a]) <= sq_dist(&centroids[i], &centroids[b])
            };
            if to_left {
                left.push(e);
            } else {
                right.push(e);
            }
        }
        let leaf = self.nodes[node].leaf;
        self.nodes[node].entries = left;
        self.nodes.push(CfNode {
            leaf,
            entries: right,
        });
        self.nodes.len() - 1
    }

    pub fn node_cf(&self, node: usize) -> ClusteringFeature {
        let mut total = ClusteringFeature::empty(self.dim);
        for e in &self.nodes[node].entries {
            total.merge(&e.cf);
        }
        total
    }

    /// Leaf subclusters in left-to-right tree order.
    pub fn leaf_subclusters(&self) -> Vec<ClusteringFeature> {
        let mut out = Vec::new();
        self.collect_leaves(self.root, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<ClusteringFeature>) {
        let n = &self.nodes[node];
        for e in &n.entries {
            match e.child {
                Some(c) if !n.leaf => self.collect_leaves(c, out),
                _ => out.push(e.cf.clone()),
            }
        }
    }
}

/// Entry whose centroid is nearest to the centroid of `ls / n`; first on ties.
fn closest_entry(entries: &[CfEntry], ls: &[f64], n: usize) -> Option<usize> {
    let c: Vec<f64> = ls.iter().map(|v| v / n as f64).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        let d = sq_dist(&e.cf.centroid(), &c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Ward merge cost between two CFs: the increase in within-cluster sum of squares.
fn ward_cost(a: &ClusteringFeature, b: &ClusteringFeature) -> f64 {
    let (na, nb) = (a.n as f64, b.n as f64);
    let ca = a.centroid();
    let cb = b.centroid();
    na * nb / (na + nb) * sq_dist(&ca, &cb)
}

/// Agglomerates CFs to at most `k` groups with Ward linkage (nearest-neighbour chain).
///
/// Returns, for each input CF, the index of its final group.
pub fn ward_agglomerate(cfs: &[ClusteringFeature], k: usize) -> Vec<usize> {
    let m = cfs.len();
    let mut active: Vec<Option<ClusteringFeature>> = cfs.iter().cloned().map(Some).collect();
    let mut owner: Vec<usize> = (0..m).collect();
    let mut remaining = m;
    let mut chain: Vec<usize> = Vec::new();
    while remaining > k.max(1) {
        if chain.is_empty() {
            chain.push(active.iter().position(Option::is_some).unwrap());
        }
        loop {
            let top = *chain.last().unwrap();
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            let top_cf = active[top].as_ref().unwrap();
            let mut best: Option<(usize, f64)> = None;
            for (j, c) in active.iter().enumerate() {
                let Some(c) = c else { continue };
                if j == top {
                    continue;
                }
                let d = ward_cost(top_cf, c);
                // prefer the chain predecessor on ties so the chain terminates
                let better = match best {
                    None => true,
                    Some((bj, bd)) => d < bd || (d == bd && Some(j) == prev && Some(bj) != prev),
                };
                if better {
                    best = Some((j, d));
                }
            }
            let (nn, _) = best.unwrap();
            if Some(nn) == prev {
                chain.pop();
                chain.pop();
                let (a, b) = if top < nn { (top, nn) } else { (nn, top) };
                let merged = active[a].as_ref().unwrap().merged(active[b].as_ref().unwrap());
                active[a] = Some(merged);
                active[b] = None;
                owner.iter_mut().filter(|o| **o == b).for_each(|o| *o = a);
                remaining -= 1;
                break;
            }
            chain.push(nn);
        }
    }
    // dense group ids in order of the surviving representative
    let mut dense = vec![usize::MAX; m];
    let mut next = 0;
    for i in 0..m {
        if active[i].is_some() {
            dense[i] = next;
            next += 1;
        }
    }
    owner.into_iter().map(|o| dense[o]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirchConfig {
    pub k: usize,
    pub branching: usize,
    /// Absorption threshold; `None` picks one from a seeded pilot sample.
    pub threshold: Option<f64>,
    pub seed: u64,
}

impl BirchConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        BirchConfig {
            k,
            branching: DEFAULT_BRANCHING,
            threshold: None,
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BirchFit {
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    pub threshold: f64,
    pub subclusters: usize,
    pub tree: CfTree,
}

/// Half the mean nearest-neighbour distance over a seeded sample of at most 512 points.
pub fn pilot_threshold(x: &Matrix, seed: u64) -> f64 {
    let n = x.rows();
    if n < 2 {
        return 0.0;
    }
    let idx: Vec<usize> = if n <= PILOT_SAMPLE {
        (0..n).collect()
    } else {
        let mut rng = rng::stream(seed, streams::BIRCH_PILOT);
        let mut v = index::sample(&mut rng, n, PILOT_SAMPLE).into_vec();
        v.sort_unstable();
        v
    };
    let mut total = 0.0;
    for &i in &idx {
        let nn = idx
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| sq_dist(x.row(i), x.row(j)))
            .fold(f64::INFINITY, f64::min);
        total += nn.sqrt();
    }
    0.5 * total / idx.len() as f64
}

pub fn birch(x: &Matrix, config: &BirchConfig) -> Result<ClusteringResult> {
    Ok(ClusteringResult::from_raw_labels(&birch_fit(x, config)?.labels))
}

pub fn birch_fit(x: &Matrix, config: &BirchConfig) -> Result<BirchFit> {
    if config.k == 0 {
        return Err(Error::invalid("Birch needs k >= 1"));
    }
    if x.rows() == 0 {
        return Err(Error::invalid("Birch needs at least one point"));
    }
    let (tree, threshold) = match config.threshold {
        Some(t) => (CfTree::build(x, config.branching, t)?, t),
        None => {
            // shrink the pilot threshold until the tree has at least k leaves
            let mut t = pilot_threshold(x, config.seed);
            let mut tree = CfTree::build(x, config.branching, t)?;
            let mut tries = 0;
            while tree.leaf_subclusters().len() < config.k && t > 0.0 && tries < 20 {
                t *= 0.5;
                tries += 1;
                tree = CfTree::build(x, config.branching, t)?;
            }
            (tree, t)
        }
    };
    let leaves = tree.leaf_subclusters();
    let groups = ward_agglomerate(&leaves, config.k);
    let g = groups.iter().copied().max().map_or(0, |m| m + 1);
    let mut finals: Vec<ClusteringFeature> = vec![ClusteringFeature::empty(x.cols()); g];
    for (cf, &grp) in leaves.iter().zip(&groups) {
        finals[grp].merge(cf);
    }
    let centroids = Matrix::from_rows(&finals.iter().map(|f| f.centroid()).collect::<Vec<_>>())?;
    let labels = x
        .row_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for j in 0..centroids.rows() {
                let d = sq_dist(p, centroids.row(j));
                if d < best.1 {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect();
    Ok(BirchFit {
        labels,
        centroids,
        threshold,
        subclusters: leaves.len(),
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;
    use crate::metrics::ari;

    fn check_additivity(tree: &CfTree, node: usize) -> usize {
        let n = &tree.nodes[node];
        let mut count = 0;
        for e in &n.entries {
            if n.leaf {
                assert!(e.cf.radius() <= tree.threshold + 1e-12);
                count += e.cf.n;
            } else {
                let child = e.child.unwrap();
                let sum = tree.node_cf(child);
                assert_eq!(sum.n, e.cf.n);
                assert!((sum.ss - e.cf.ss).abs() <= 1e-9 * (1.0 + sum.ss.abs()));
                for (a, b) in sum.ls.iter().zip(&e.cf.ls) {
                    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
                }
                assert_eq!(check_additivity(tree, child), e.cf.n);
                count += e.cf.n;
            }
        }
        count
    }

    #[test]
    fn all_points_within_threshold_form_one_cluster() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.05, 0.05]]).unwrap();
        let cfg = BirchConfig {
            threshold: Some(1.0),
            ..BirchConfig::new(1, 0)
        };
        let fit = birch_fit(&x, &cfg).unwrap();
        assert_eq!(fit.subclusters, 1);
        assert!(fit.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn blobs_are_recovered() {
        let (x, gt) = synth_blobs(500, 10, 5, 1.0, 7).unwrap();
        let r = birch(&x, &BirchConfig::new(5, 7)).unwrap();
        assert!(ari(&gt, &r.labels).unwrap() >= 0.95);
    }

    #[test]
    fn tree_invariants_hold_after_many_splits() {
        let (x, _) = synth_blobs(400, 3, 6, 2.0, 1).unwrap();
        let tree = CfTree::build(&x, 4, 0.3).unwrap();
        assert!(tree.nodes.len() > 10, "expected splits");
        assert_eq!(check_additivity(&tree, tree.root), 400);
        let total: usize = tree.leaf_subclusters().iter().map(|c| c.n).sum();
        assert_eq!(total, 400);
    }

    #[test]
    fn ward_merges_nearest_pairs_first() {
        let pts = [[0.0], [0.2], [10.0], [10.3], [50.0]];
        let cfs: Vec<_> = pts.iter().map(|p| ClusteringFeature::from_point(p)).collect();
        let groups = ward_agglomerate(&cfs, 3);
        assert_eq!(groups[0], groups[1]);
        assert_eq!(groups[2], groups[3]);
        assert_ne!(groups[0], groups[2]);
        assert_ne!(groups[4], groups[0]);
        assert_ne!(groups[4], groups[2]);
    }

    #[test]
    fn fewer_subclusters_than_k_is_tolerated() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [0.0]]).unwrap();
        let r = birch(&x, &BirchConfig::new(2, 0)).unwrap();
        assert_eq!(r.k_predicted, 1);
    }
}
