//! BIRCH clustering with Davies-Bouldin model selection.
//!
//! Phase 1 compresses points into CF-tree leaf entries bounded by the
//! radius threshold; phase 2 merges entry centroids agglomeratively
//! (Euclidean, average linkage weighted by entry point counts) down to a
//! requested cluster count. The best count is the one minimizing the
//! Davies-Bouldin index over candidate counts 2..n.

pub mod birch;

pub use birch::{build_tree, CfEntry, CfTree};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::ClusterError;

/// Default CF-tree branching factor.
pub const DEFAULT_BRANCHING: usize = 50;
/// Default cap on the cluster-count search loop.
pub const DEFAULT_MAX_K: usize = 50;
/// Reference BIRCH thresholds: GCN embeddings, RGCN embeddings, and
/// misuse detection runs.
pub const BIRCH_THRESHOLD_GCN: f64 = 1.5;
pub const BIRCH_THRESHOLD_RGCN: f64 = 2.1;
pub const BIRCH_THRESHOLD_DETECT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    /// Cluster label per input row, in [0, k).
    pub labels: Vec<usize>,
    pub k: usize,
    /// Mean of member points per cluster.
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    /// Davies-Bouldin index of this labeling; NaN when k < 2.
    pub db_score: f64,
    pub birch_threshold: f64,
}

/// Per-cluster scatter and centroid separation backing the DB index.
#[derive(Debug, Clone)]
pub struct ClusterStats {
    /// Mean distance of members to their centroid, per cluster.
    pub s: Vec<f64>,
    /// Pairwise centroid distances (symmetric, zero diagonal).
    pub m: Array2<f64>,
    pub centroids: Vec<Array1<f64>>,
}

fn euclid(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let d = &a.to_owned() - &b;
    d.dot(&d).sqrt()
}

/// Scatter/separation statistics for a labeling with compact labels 0..k.
pub fn cluster_stats(
    points: ArrayView2<f64>,
    labels: &[usize],
) -> Result<ClusterStats, ClusterError> {
    if points.nrows() != labels.len() {
        return Err(ClusterError::Degenerate(format!(
            "{} points but {} labels",
            points.nrows(),
            labels.len()
        )));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(ClusterError::Degenerate("labels are not compact".into()));
    }
    let d = points.ncols();
    let mut centroids = vec![Array1::<f64>::zeros(d); k];
    for (row, &l) in labels.iter().enumerate() {
        centroids[l] = &centroids[l] + &points.row(row);
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        *c /= n as f64;
    }
    let mut s = vec![0.0; k];
    for (row, &l) in labels.iter().enumerate() {
        s[l] += euclid(points.row(row), centroids[l].view());
    }
    for (v, &n) in s.iter_mut().zip(&counts) {
        *v /= n as f64;
    }
    let mut m = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        for j in i + 1..k {
            let dist = euclid(centroids[i].view(), centroids[j].view());
            m[(i, j)] = dist;
            m[(j, i)] = dist;
        }
    }
    Ok(ClusterStats { s, m, centroids })
}

/// Davies-Bouldin index: the mean over clusters of the worst
/// (S_i + S_j) / M_ij ratio. Lower is better.
pub fn davies_bouldin(points: ArrayView2<f64>, labels: &[usize]) -> Result<f64, ClusterError> {
    let stats = cluster_stats(points, labels)?;
    let k = stats.s.len();
    if k < 2 {
        return Err(ClusterError::Degenerate("need at least two clusters".into()));
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            if stats.m[(i, j)] == 0.0 {
                return Err(ClusterError::Degenerate("coincident centroids".into()));
            }
            worst = worst.max((stats.s[i] + stats.s[j]) / stats.m[(i, j)]);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Phase-1 output plus the full agglomerative merge order, reusable across
/// candidate cluster counts.
struct BirchPhase {
    /// Leaf-entry ordinal per point.
    point_entry: Vec<usize>,
    /// Point count per entry ordinal.
    entry_n: Vec<usize>,
    /// Merge order over entry-cluster slots: (kept, absorbed).
    merges: Vec<(usize, usize)>,
}

impl BirchPhase {
    fn prepare(points: ArrayView2<f64>, threshold: f64, branching: usize) -> Self {
        let (tree, assignment) = build_tree(points, threshold, branching);
        let leaves = tree.leaf_entries();
        let mut ordinal_of_id = std::collections::BTreeMap::new();
        for (ordinal, (id, _)) in leaves.iter().enumerate() {
            ordinal_of_id.insert(*id, ordinal);
        }
        let point_entry: Vec<usize> = assignment.iter().map(|id| ordinal_of_id[id]).collect();
        let entry_n: Vec<usize> = leaves.iter().map(|(_, cf)| cf.n).collect();

        // Weighted average-linkage merge sequence over entry centroids.
        let m = leaves.len();
        let mut dist = vec![vec![0.0f64; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let d = euclid(leaves[i].1.centroid().view(), leaves[j].1.centroid().view());
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        let mut weight: Vec<f64> = entry_n.iter().map(|&n| n as f64).collect();
        let mut active: Vec<bool> = vec![true; m];
        let mut merges = Vec::with_capacity(m.saturating_sub(1));
        for _ in 1..m {
            let mut best: Option<(usize, usize, f64)> = None;
            for i in 0..m {
                if !active[i] {
                    continue;
                }
                for j in i + 1..m {
                    if !active[j] {
                        continue;
                    }
                    if best.map_or(true, |(_, _, d)| dist[i][j] < d) {
                        best = Some((i, j, dist[i][j]));
                    }
                }
            }
            let (a, b, _) = best.expect("more than one active cluster");
            // Lance-Williams update for weighted average linkage.
            let (wa, wb) = (weight[a], weight[b]);
            for k in 0..m {
                if active[k] && k != a && k != b {
                    let d = (wa * dist[a][k] + wb * dist[b][k]) / (wa + wb);
                    dist[a][k] = d;
                    dist[k][a] = d;
                }
            }
            weight[a] += weight[b];
            active[b] = false;
            merges.push((a, b));
        }
        Self { point_entry, entry_n, merges }
    }

    fn entry_count(&self) -> usize {
        self.entry_n.len()
    }

    /// Cut the dendrogram at `k` clusters and label points by their
    /// entry's cluster, relabeled in first-point-appearance order.
    fn cut(&self, k: usize) -> Result<Vec<usize>, ClusterError> {
        let m = self.entry_count();
        if k < 1 || k > m {
            return Err(ClusterError::InvalidK { k, available: m });
        }
        let mut slot: Vec<usize> = (0..m).collect();
        for &(a, b) in &self.merges[..m - k] {
            for s in slot.iter_mut() {
                if *s == b {
                    *s = a;
                }
            }
        }
        let mut relabel = std::collections::BTreeMap::new();
        let mut labels = Vec::with_capacity(self.point_entry.len());
        for &e in &self.point_entry {
            let next = relabel.len();
            let l = *relabel.entry(slot[e]).or_insert(next);
            labels.push(l);
        }
        Ok(labels)
    }
}

fn result_from_labels(
    points: ArrayView2<f64>,
    labels: Vec<usize>,
    threshold: f64,
) -> ClusteringResult {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let stats = cluster_stats(points, &labels).expect("labels are compact by construction");
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let db_score = davies_bouldin(points, &labels).unwrap_or(f64::NAN);
    ClusteringResult {
        labels,
        k,
        centroids: stats.centroids.iter().map(|c| c.to_vec()).collect(),
        sizes,
        db_score,
        birch_threshold: threshold,
    }
}

/// BIRCH to exactly `k` clusters.
///
/// Insertion order is the row order of `points`; identical inputs produce
/// identical outputs.
pub fn birch_cluster(
    points: ArrayView2<f64>,
    threshold: f64,
    k: usize,
) -> Result<ClusteringResult, ClusterError> {
    let n = points.nrows();
    if k < 1 || k > n {
        return Err(ClusterError::InvalidK { k, available: n });
    }
    let phase = BirchPhase::prepare(points, threshold, DEFAULT_BRANCHING);
    let labels = phase.cut(k)?;
    Ok(result_from_labels(points, labels, threshold))
}

/// Candidate counts 2..=n (capped by `max_k`), keeping the labeling with
/// the minimum DB score; degenerate counts are skipped.
pub fn select_best_clustering(
    points: ArrayView2<f64>,
    threshold: f64,
    max_k: Option<usize>,
) -> Result<ClusteringResult, ClusterError> {
    let n = points.nrows();
    if n < 2 {
        return Err(ClusterError::InvalidK { k: 2, available: n });
    }
    let phase = BirchPhase::prepare(points, threshold, DEFAULT_BRANCHING);
    let cap = max_k.unwrap_or(DEFAULT_MAX_K).min(n);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for k in 2..=cap {
        let labels = match phase.cut(k) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let db = match davies_bouldin(points, &labels) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if best.as_ref().map_or(true, |(b, _)| db < *b) {
            best = Some((db, labels));
        }
    }
    let (_, labels) = best.ok_or(ClusterError::AllDegenerate)?;
    Ok(result_from_labels(points, labels, threshold))
}

/// Index of the Euclidean-nearest centroid; ties go to the lowest index.
pub fn assign(embedding: ArrayView1<f64>, clustering: &ClusteringResult) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, c) in clustering.centroids.iter().enumerate() {
        let d: f64 = c
            .iter()
            .zip(embedding.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests;
