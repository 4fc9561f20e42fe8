//! External clustering indices and misuse detection.
//!
//! Rand/mutual-information scores and their chance-adjusted variants are
//! computed from the label contingency table (natural log, exact
//! hypergeometric expectation for AMI). Detection flags an example as
//! potential misuse when its assigned cluster holds fewer members than a
//! percentage of the historic corpus.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::cluster::{assign, ClusteringResult};
use crate::error::EvalError;

/// Label co-occurrence counts with row/column marginals.
#[derive(Debug, Clone)]
pub struct Contingency {
    pub counts: Vec<Vec<u64>>,
    /// Row sums (first labeling).
    pub a: Vec<u64>,
    /// Column sums (second labeling).
    pub b: Vec<u64>,
    pub n: u64,
}

impl Contingency {
    pub fn from_labels(u: &[usize], v: &[usize]) -> Result<Self, EvalError> {
        if u.len() != v.len() {
            return Err(EvalError::LengthMismatch { left: u.len(), right: v.len() });
        }
        if u.len() < 2 {
            return Err(EvalError::TooFewSamples { min: 2, got: u.len() });
        }
        let compact = |labels: &[usize]| {
            let mut map = std::collections::BTreeMap::new();
            labels
                .iter()
                .map(|l| {
                    let next = map.len();
                    *map.entry(*l).or_insert(next)
                })
                .collect::<Vec<usize>>()
        };
        let cu = compact(u);
        let cv = compact(v);
        let rows = cu.iter().max().unwrap() + 1;
        let cols = cv.iter().max().unwrap() + 1;
        let mut counts = vec![vec![0u64; cols]; rows];
        for (&i, &j) in cu.iter().zip(&cv) {
            counts[i][j] += 1;
        }
        let a: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let b: Vec<u64> =
            (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { counts, a, b, n: u.len() as u64 })
    }

    fn pair_sum(vals: impl Iterator<Item = u64>) -> f64 {
        vals.map(|c| (c * c.saturating_sub(1)) as f64 / 2.0).sum()
    }

    fn same_in_both(&self) -> f64 {
        Self::pair_sum(self.counts.iter().flatten().copied())
    }

    fn same_in_a(&self) -> f64 {
        Self::pair_sum(self.a.iter().copied())
    }

    fn same_in_b(&self) -> f64 {
        Self::pair_sum(self.b.iter().copied())
    }

    fn total_pairs(&self) -> f64 {
        (self.n * (self.n - 1)) as f64 / 2.0
    }
}

/// Fraction of sample pairs grouped consistently by both labelings.
pub fn rand_index(u: &[usize], v: &[usize]) -> Result<f64, EvalError> {
    let c = Contingency::from_labels(u, v)?;
    let agreements =
        c.total_pairs() + 2.0 * c.same_in_both() - c.same_in_a() - c.same_in_b();
    Ok(agreements / c.total_pairs())
}

/// Rand index adjusted for chance; 0 for random labelings, 1 for a match.
pub fn adjusted_rand(u: &[usize], v: &[usize]) -> Result<f64, EvalError> {
    let c = Contingency::from_labels(u, v)?;
    let index = c.same_in_both();
    let expected = c.same_in_a() * c.same_in_b() / c.total_pairs();
    let max_index = 0.5 * (c.same_in_a() + c.same_in_b());
    let denom = max_index - expected;
    if denom.abs() < 1e-12 {
        return Ok(if (index - expected).abs() < 1e-12 { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Mutual information in nats.
pub fn mutual_info(u: &[usize], v: &[usize]) -> Result<f64, EvalError> {
    let c = Contingency::from_labels(u, v)?;
    Ok(mi_of(&c))
}

fn mi_of(c: &Contingency) -> f64 {
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let p = nij as f64 / n;
            mi += p * ((n * nij as f64) / (c.a[i] as f64 * c.b[j] as f64)).ln();
        }
    }
    mi
}

/// Shannon entropy of a labeling's cluster-size distribution, in nats.
pub fn entropy(marginals: &[u64], n: u64) -> f64 {
    marginals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Exact E[MI] under the permutation (hypergeometric) model.
pub fn expected_mutual_info(c: &Contingency) -> f64 {
    let n = c.n as usize;
    // ln k! table.
    let mut lnfact = vec![0.0f64; n + 1];
    for k in 1..=n {
        lnfact[k] = lnfact[k - 1] + (k as f64).ln();
    }
    let nf = c.n as f64;
    let mut emi = 0.0;
    for &ai in &c.a {
        for &bj in &c.b {
            let (ai, bj) = (ai as usize, bj as usize);
            let lo = 1.max((ai + bj).saturating_sub(n));
            let hi = ai.min(bj);
            for nij in lo..=hi {
                let term = (nij as f64 / nf) * ((nf * nij as f64) / (ai as f64 * bj as f64)).ln();
                let ln_weight = lnfact[ai] + lnfact[bj] + lnfact[n - ai] + lnfact[n - bj]
                    - lnfact[n]
                    - lnfact[nij]
                    - lnfact[ai - nij]
                    - lnfact[bj - nij]
                    - lnfact[n - ai - bj + nij];
                emi += term * ln_weight.exp();
            }
        }
    }
    emi
}

/// Mutual information adjusted for chance using the arithmetic mean of the
/// two entropies as the normalizer.
pub fn adjusted_mutual_info(u: &[usize], v: &[usize]) -> Result<f64, EvalError> {
    let c = Contingency::from_labels(u, v)?;
    if c.a.len() == 1 && c.b.len() == 1 {
        return Ok(1.0);
    }
    let mi = mi_of(&c);
    let emi = expected_mutual_info(&c);
    let normalizer = 0.5 * (entropy(&c.a, c.n) + entropy(&c.b, c.n));
    let denom = normalizer - emi;
    if denom.abs() < 1e-12 {
        return Ok(if (mi - emi).abs() < 1e-12 { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CorrectUse,
    PotentialMisuse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub id: String,
    pub cluster: usize,
    pub cluster_size: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// Size cutoff as a percentage of the historic corpus.
    pub threshold_pct: f64,
    /// Historic corpus size the percentage applies to.
    pub total: usize,
    pub rows: Vec<DetectionRow>,
    pub summary: Option<ConfusionMetrics>,
}

/// Members required for a cluster to count as large (correct usage).
pub fn size_cutoff(threshold_pct: f64, total: usize) -> usize {
    (threshold_pct / 100.0 * total as f64).ceil() as usize
}

/// Assign each embedding to its nearest historic cluster and flag it when
/// that cluster's size falls below the percentage cutoff.
pub fn detect(
    ids: &[String],
    embeddings: ArrayView2<f64>,
    clustering: &ClusteringResult,
    threshold_pct: f64,
) -> DetectionReport {
    let total = clustering.labels.len();
    let cutoff = size_cutoff(threshold_pct, total);
    let rows = ids
        .iter()
        .zip(embeddings.rows())
        .map(|(id, row)| {
            let cluster = assign(row, clustering);
            let cluster_size = clustering.sizes[cluster];
            DetectionRow {
                id: id.clone(),
                cluster,
                cluster_size,
                verdict: if cluster_size < cutoff {
                    Verdict::PotentialMisuse
                } else {
                    Verdict::CorrectUse
                },
            }
        })
        .collect();
    DetectionReport { threshold_pct, total, rows, summary: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No predicted positives: precision reported as 0.
    pub undefined_precision: bool,
    /// No actual positives: recall reported as 0.
    pub undefined_recall: bool,
}

/// Standard confusion metrics with misuse as the positive class.
pub fn confusion_metrics(predicted_misuse: &[bool], truth_misuse: &[bool]) -> ConfusionMetrics {
    assert_eq!(predicted_misuse.len(), truth_misuse.len(), "aligned label slices");
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut tn = 0.0;
    let mut fne = 0.0;
    for (&p, &t) in predicted_misuse.iter().zip(truth_misuse) {
        match (p, t) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fne += 1.0,
        }
    }
    let undefined_precision = tp + fp == 0.0;
    let undefined_recall = tp + fne == 0.0;
    let precision = if undefined_precision { 0.0 } else { tp / (tp + fp) };
    let recall = if undefined_recall { 0.0 } else { tp / (tp + fne) };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ConfusionMetrics {
        accuracy: (tp + tn) / predicted_misuse.len() as f64,
        precision,
        recall,
        f1,
        undefined_precision,
        undefined_recall,
    }
}

/// Default sweep grid: 5% through 40% in steps of 5.
pub const DEFAULT_SWEEP_GRID: [f64; 8] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold_pct: f64,
    pub metrics: ConfusionMetrics,
}

/// One confusion row per size threshold.
pub fn threshold_sweep(
    ids: &[String],
    embeddings: ArrayView2<f64>,
    clustering: &ClusteringResult,
    truth_misuse: &[bool],
    pcts: &[f64],
) -> Vec<SweepRow> {
    pcts.iter()
        .map(|&pct| {
            let report = detect(ids, embeddings, clustering, pct);
            let predicted: Vec<bool> = report
                .rows
                .iter()
                .map(|r| r.verdict == Verdict::PotentialMisuse)
                .collect();
            SweepRow { threshold_pct: pct, metrics: confusion_metrics(&predicted, truth_misuse) }
        })
        .collect()
}

#[cfg(test)]
mod tests;
