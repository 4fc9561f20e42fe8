//! BIRCH clustering-feature tree.
//!
//! Phase 1 inserts each point into the closest leaf entry, opening a new
//! entry whenever absorption would push the entry radius past the
//! threshold; nodes split at the branching factor with farthest-pair
//! seeding. Leaf entries keep stable ids so points can be traced to their
//! final cluster after the global phase.

use ndarray::{Array1, ArrayView1, ArrayView2};

/// Clustering feature: point count, linear sum, and squared-norm sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CfEntry {
    pub n: usize,
    pub ls: Array1<f64>,
    pub ss: f64,
}

impl CfEntry {
    pub fn from_point(p: ArrayView1<f64>) -> Self {
        Self { n: 1, ls: p.to_owned(), ss: p.dot(&p) }
    }

    /// Componentwise CF additivity.
    pub fn merge(&self, other: &CfEntry) -> CfEntry {
        CfEntry { n: self.n + other.n, ls: &self.ls + &other.ls, ss: self.ss + other.ss }
    }

    pub fn add_point(&mut self, p: ArrayView1<f64>) {
        self.n += 1;
        self.ls = &self.ls + &p;
        self.ss += p.dot(&p);
    }

    pub fn centroid(&self) -> Array1<f64> {
        &self.ls / self.n as f64
    }

    /// RMS distance of member points to the centroid; zero for singletons
    /// (clamped against cancellation noise).
    pub fn radius(&self) -> f64 {
        let c = self.centroid();
        (self.ss / self.n as f64 - c.dot(&c)).max(0.0).sqrt()
    }

    fn radius_with(&self, p: ArrayView1<f64>) -> f64 {
        let n = (self.n + 1) as f64;
        let ls = &self.ls + &p;
        let ss = self.ss + p.dot(&p);
        let c = &ls / n;
        (ss / n - c.dot(&c)).max(0.0).sqrt()
    }

    fn centroid_dist(&self, other: &CfEntry) -> f64 {
        let d = self.centroid() - other.centroid();
        d.dot(&d).sqrt()
    }
}

/// A leaf entry with its stable id.
#[derive(Debug, Clone)]
struct LeafEntry {
    id: usize,
    cf: CfEntry,
}

#[derive(Debug)]
enum Node {
    Leaf { entries: Vec<LeafEntry> },
    Internal { children: Vec<(CfEntry, Node)> },
}

impl Node {
    fn summary(&self) -> CfEntry {
        match self {
            Node::Leaf { entries } => {
                let mut it = entries.iter();
                let first = it.next().expect("nonempty node").cf.clone();
                it.fold(first, |acc, e| acc.merge(&e.cf))
            }
            Node::Internal { children } => {
                let mut it = children.iter();
                let first = it.next().expect("nonempty node").0.clone();
                it.fold(first, |acc, (cf, _)| acc.merge(cf))
            }
        }
    }
}

pub struct CfTree {
    threshold: f64,
    branching: usize,
    root: Node,
    next_id: usize,
    empty: bool,
}

enum Insert {
    /// Point was absorbed or added; returns the entry id it landed in.
    Done(usize),
    /// Child overflowed and split into two nodes.
    Split(usize, (CfEntry, Node), (CfEntry, Node)),
}

impl CfTree {
    pub fn new(threshold: f64, branching: usize) -> Self {
        assert!(threshold > 0.0, "BIRCH threshold must be positive");
        assert!(branching >= 2, "branching factor must be at least 2");
        Self {
            threshold,
            branching,
            root: Node::Leaf { entries: Vec::new() },
            next_id: 0,
            empty: true,
        }
    }

    /// Insert a point, returning the id of the leaf entry that took it.
    pub fn insert(&mut self, p: ArrayView1<f64>) -> usize {
        self.empty = false;
        let threshold = self.threshold;
        let branching = self.branching;
        let next_id = &mut self.next_id;
        match Self::insert_into(&mut self.root, p, threshold, branching, next_id) {
            Insert::Done(id) => id,
            Insert::Split(id, a, b) => {
                // The old root's contents were moved into the split halves.
                self.root = Node::Internal { children: vec![a, b] };
                id
            }
        }
    }

    fn insert_into(
        node: &mut Node,
        p: ArrayView1<f64>,
        threshold: f64,
        branching: usize,
        next_id: &mut usize,
    ) -> Insert {
        match node {
            Node::Leaf { entries } => {
                let closest = entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let d = e.cf.centroid() - &p;
                        (i, d.dot(&d))
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i);
                if let Some(i) = closest {
                    if entries[i].cf.radius_with(p) <= threshold {
                        entries[i].cf.add_point(p);
                        return Insert::Done(entries[i].id);
                    }
                }
                let id = *next_id;
                *next_id += 1;
                entries.push(LeafEntry { id, cf: CfEntry::from_point(p) });
                if entries.len() <= branching {
                    return Insert::Done(id);
                }
                let (left, right) = split_leaf(std::mem::take(entries));
                let left = Node::Leaf { entries: left };
                let right = Node::Leaf { entries: right };
                let (ls, rs) = (left.summary(), right.summary());
                Insert::Split(id, (ls, left), (rs, right))
            }
            Node::Internal { children } => {
                let probe = CfEntry::from_point(p);
                let best = children
                    .iter()
                    .enumerate()
                    .map(|(i, (cf, _))| (i, cf.centroid_dist(&probe)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i)
                    .expect("internal nodes are nonempty");
                match Self::insert_into(&mut children[best].1, p, threshold, branching, next_id)
                {
                    Insert::Done(id) => {
                        children[best].0 = children[best].1.summary();
                        Insert::Done(id)
                    }
                    Insert::Split(id, a, b) => {
                        children.remove(best);
                        children.push(a);
                        children.push(b);
                        if children.len() <= branching {
                            return Insert::Done(id);
                        }
                        let (left, right) = split_internal(std::mem::take(children));
                        let left = Node::Internal { children: left };
                        let right = Node::Internal { children: right };
                        let (ls, rs) = (left.summary(), right.summary());
                        Insert::Split(id, (ls, left), (rs, right))
                    }
                }
            }
        }
    }

    /// Leaf entries in left-to-right tree order: (entry id, CF).
    pub fn leaf_entries(&self) -> Vec<(usize, CfEntry)> {
        let mut out = Vec::new();
        if self.empty {
            return out;
        }
        collect_leaves(&self.root, &mut out);
        out
    }
}

fn collect_leaves(node: &Node, out: &mut Vec<(usize, CfEntry)>) {
    match node {
        Node::Leaf { entries } => {
            for e in entries {
                out.push((e.id, e.cf.clone()));
            }
        }
        Node::Internal { children } => {
            for (_, child) in children {
                collect_leaves(child, out);
            }
        }
    }
}

fn split_leaf(entries: Vec<LeafEntry>) -> (Vec<LeafEntry>, Vec<LeafEntry>) {
    let (ia, ib) = farthest_pair(&entries.iter().map(|e| e.cf.clone()).collect::<Vec<_>>());
    let seed_a = entries[ia].cf.centroid();
    let seed_b = entries[ib].cf.centroid();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for e in entries {
        let c = e.cf.centroid();
        let da = {
            let d = &c - &seed_a;
            d.dot(&d)
        };
        let db = {
            let d = &c - &seed_b;
            d.dot(&d)
        };
        if da <= db {
            left.push(e);
        } else {
            right.push(e);
        }
    }
    if right.is_empty() {
        // Coincident centroids; keep both sides populated.
        right.push(left.pop().expect("overflowing leaf has entries"));
    }
    (left, right)
}

fn split_internal(
    children: Vec<(CfEntry, Node)>,
) -> (Vec<(CfEntry, Node)>, Vec<(CfEntry, Node)>) {
    let cfs: Vec<CfEntry> = children.iter().map(|(cf, _)| cf.clone()).collect();
    let (ia, ib) = farthest_pair(&cfs);
    let seed_a = cfs[ia].centroid();
    let seed_b = cfs[ib].centroid();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (cf, node) in children {
        let c = cf.centroid();
        let da = {
            let d = &c - &seed_a;
            d.dot(&d)
        };
        let db = {
            let d = &c - &seed_b;
            d.dot(&d)
        };
        if da <= db {
            left.push((cf, node));
        } else {
            right.push((cf, node));
        }
    }
    if right.is_empty() {
        right.push(left.pop().expect("overflowing node has children"));
    }
    (left, right)
}

/// Indices of the two entries with the largest centroid distance;
/// ties resolve to the lowest index pair.
fn farthest_pair(cfs: &[CfEntry]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_d = -1.0;
    for i in 0..cfs.len() {
        for j in i + 1..cfs.len() {
            let d = cfs[i].centroid_dist(&cfs[j]);
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

/// Build a CF tree over the rows of `points`, in row order; returns the
/// tree and each point's leaf-entry id.
pub fn build_tree(points: ArrayView2<f64>, threshold: f64, branching: usize) -> (CfTree, Vec<usize>) {
    let mut tree = CfTree::new(threshold, branching);
    let assignment = points.rows().into_iter().map(|p| tree.insert(p)).collect();
    (tree, assignment)
}
