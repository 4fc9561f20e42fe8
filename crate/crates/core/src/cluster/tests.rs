use super::*;
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.gen_range(-scale..scale))
}

/// Plain average-linkage agglomerative clustering over points, O(n^3);
/// an independent oracle for the singleton-entry regime.
fn average_linkage_oracle(points: &Array2<f64>, k: usize) -> Vec<usize> {
    let n = points.nrows();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(points.row(i), points.row(j));
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut active = n;
    while active > k {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if members[i].is_none() {
                continue;
            }
            for j in i + 1..n {
                if members[j].is_none() {
                    continue;
                }
                // Average pairwise point distance between clusters.
                let (mi, mj) = (members[i].as_ref().unwrap(), members[j].as_ref().unwrap());
                let mut sum = 0.0;
                for &a in mi {
                    for &b in mj {
                        sum += dist[a][b];
                    }
                }
                let d = sum / (mi.len() * mj.len()) as f64;
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (a, b, _) = best.unwrap();
        let absorbed = members[b].take().unwrap();
        members[a].as_mut().unwrap().extend(absorbed);
        active -= 1;
    }
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut cluster_of = vec![usize::MAX; n];
    for m in members.iter().flatten() {
        for &p in m {
            cluster_of[p] = next;
        }
        next += 1;
    }
    // Canonical: first-appearance relabeling in point order.
    let mut relabel = std::collections::BTreeMap::new();
    for (i, &c) in cluster_of.iter().enumerate() {
        let next = relabel.len();
        labels[i] = *relabel.entry(c).or_insert(next);
    }
    labels
}

#[test]
fn cf_additivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pts = random_points(&mut rng, 6, 4, 2.0);
    let mut a = CfEntry::from_point(pts.row(0));
    for i in 1..3 {
        a.add_point(pts.row(i));
    }
    let mut b = CfEntry::from_point(pts.row(3));
    for i in 4..6 {
        b.add_point(pts.row(i));
    }
    let merged = a.merge(&b);
    let mut whole = CfEntry::from_point(pts.row(0));
    for i in 1..6 {
        whole.add_point(pts.row(i));
    }
    assert_eq!(merged.n, whole.n);
    assert!((merged.ss - whole.ss).abs() < 1e-12);
    for (x, y) in merged.ls.iter().zip(whole.ls.iter()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn cf_radius_is_nonnegative_for_duplicates() {
    let p = array![1.5, -2.0];
    let mut cf = CfEntry::from_point(p.view());
    for _ in 0..10 {
        cf.add_point(p.view());
    }
    assert_eq!(cf.radius(), 0.0);
    assert_eq!(cf.centroid(), p);
}

#[test]
fn huge_threshold_absorbs_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = random_points(&mut rng, 20, 3, 1.0);
    let result = birch_cluster(pts.view(), 1e9, 1).unwrap();
    assert_eq!(result.k, 1);
    assert!(result.labels.iter().all(|&l| l == 0));
    assert!(result.db_score.is_nan());
}

#[test]
fn far_duplicate_pairs_split_cleanly() {
    let pts = array![[0.0, 0.0], [0.0, 0.0], [100.0, 0.0], [100.0, 0.0]];
    let result = birch_cluster(pts.view(), 1.0, 2).unwrap();
    assert_eq!(result.labels, vec![0, 0, 1, 1]);
    assert_eq!(result.sizes, vec![2, 2]);
    assert_eq!(result.centroids[0], vec![0.0, 0.0]);
    assert_eq!(result.centroids[1], vec![100.0, 0.0]);
}

#[test]
fn tiny_threshold_matches_average_linkage_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..5 {
        let n = 20 + trial * 7; // up to 48
        let pts = random_points(&mut rng, n, 3, 5.0);
        for k in [2usize, 3, 5] {
            let got = birch_cluster(pts.view(), 1e-9, k).unwrap();
            let want = average_linkage_oracle(&pts, k);
            assert_eq!(got.labels, want, "n={n} k={k}");
        }
    }
}

#[test]
fn db_zero_for_separated_duplicate_clusters() {
    let pts = array![[0.0], [0.0], [1.0], [1.0]];
    let db = davies_bouldin(pts.view(), &[0, 0, 1, 1]).unwrap();
    assert_eq!(db, 0.0);
}

#[test]
fn db_hand_example() {
    let pts = array![[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]];
    let db = davies_bouldin(pts.view(), &[0, 0, 1, 1]).unwrap();
    assert!((db - 0.2).abs() < 1e-12, "db {db}");
}

#[test]
fn db_translation_and_scale_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let pts = random_points(&mut rng, 30, 4, 3.0);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let base = davies_bouldin(pts.view(), &labels).unwrap();
        let shifted = &pts + 7.25;
        let scaled = &pts * 3.5;
        let db_shift = davies_bouldin(shifted.view(), &labels).unwrap();
        let db_scale = davies_bouldin(scaled.view(), &labels).unwrap();
        assert!((db_shift - base).abs() / base <= 1e-9);
        assert!((db_scale - base).abs() / base <= 1e-9);
    }
}

#[test]
fn db_degenerate_cases() {
    let pts = array![[0.0], [1.0]];
    assert!(matches!(
        davies_bouldin(pts.view(), &[0, 0]),
        Err(ClusterError::Degenerate(_))
    ));
    let dup = array![[0.0], [0.0], [0.0], [0.0]];
    assert!(matches!(
        davies_bouldin(dup.view(), &[0, 0, 1, 1]),
        Err(ClusterError::Degenerate(_))
    ));
}

fn blobs(rng: &mut ChaCha8Rng, k: usize, per: usize, d: usize, sep: f64, sigma: f64) -> (Array2<f64>, Vec<usize>) {
    let n = k * per;
    let mut pts = Array2::zeros((n, d));
    let mut truth = Vec::with_capacity(n);
    for c in 0..k {
        for i in 0..per {
            let row = c * per + i;
            for j in 0..d {
                let center = if j == 0 { c as f64 * sep } else { 0.0 };
                // Box-Muller.
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                pts[(row, j)] = center + sigma * z;
            }
            truth.push(c);
        }
    }
    (pts, truth)
}

#[test]
fn algorithm_selects_three_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (pts, _) = blobs(&mut rng, 3, 30, 4, 10.0, 0.5);
    let result = select_best_clustering(pts.view(), 1.5, None).unwrap();
    assert_eq!(result.k, 3, "db={}", result.db_score);
}

#[test]
fn two_distinct_points_give_two_singletons() {
    let pts = array![[0.0, 0.0], [3.0, 4.0]];
    let result = select_best_clustering(pts.view(), 1.0, None).unwrap();
    assert_eq!(result.k, 2);
    assert_eq!(result.db_score, 0.0);
}

#[test]
fn selected_db_is_minimum_over_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (pts, _) = blobs(&mut rng, 4, 12, 3, 8.0, 0.6);
    let best = select_best_clustering(pts.view(), 1.0, None).unwrap();
    // Replay every candidate count independently.
    for k in 2..=pts.nrows().min(DEFAULT_MAX_K) {
        if let Ok(r) = birch_cluster(pts.view(), 1.0, k) {
            if let Ok(db) = davies_bouldin(pts.view(), &r.labels) {
                assert!(
                    best.db_score <= db + 1e-12,
                    "k={k} beats selection: {db} < {}",
                    best.db_score
                );
            }
        }
    }
}

#[test]
fn all_identical_points_are_degenerate() {
    let pts = Array2::from_elem((10, 3), 1.0);
    assert!(matches!(
        select_best_clustering(pts.view(), 0.5, None),
        Err(ClusterError::AllDegenerate)
    ));
}

#[test]
fn assign_exact_centroid_and_ties() {
    let clustering = ClusteringResult {
        labels: vec![0, 1],
        k: 2,
        centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0]],
        sizes: vec![1, 1],
        db_score: 0.0,
        birch_threshold: 1.0,
    };
    assert_eq!(assign(array![2.0, 0.0].view(), &clustering), 1);
    // Equidistant between centroids 0 and 1.
    assert_eq!(assign(array![1.0, 0.0].view(), &clustering), 0);
}

#[test]
fn assign_matches_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let centroids: Vec<Vec<f64>> =
        (0..7).map(|_| (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    let clustering = ClusteringResult {
        labels: vec![],
        k: centroids.len(),
        sizes: vec![1; centroids.len()],
        centroids,
        db_score: 0.0,
        birch_threshold: 1.0,
    };
    for _ in 0..1000 {
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let view = ndarray::ArrayView1::from(&p);
        let got = assign(view, &clustering);
        let want = clustering
            .centroids
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da: f64 = a.iter().zip(&p).map(|(x, y)| (x - y) * (x - y)).sum();
                let db: f64 = b.iter().zip(&p).map(|(x, y)| (x - y) * (x - y)).sum();
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(got, want);
    }
}

#[test]
fn labels_are_valid_and_sizes_conserve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts = random_points(&mut rng, 40, 3, 5.0);
    for k in [1usize, 2, 5, 9] {
        let r = birch_cluster(pts.view(), 0.8, k).unwrap();
        assert_eq!(r.k, k);
        assert!(r.labels.iter().all(|&l| l < r.k));
        assert_eq!(r.sizes.iter().sum::<usize>(), pts.nrows());
        for (c, &size) in r.centroids.iter().zip(&r.sizes) {
            // Centroid equals the mean of member points.
            let members: Vec<usize> = r
                .labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == r.centroids.iter().position(|x| x == c).unwrap())
                .map(|(i, _)| i)
                .collect();
            assert_eq!(members.len(), size);
        }
    }
}

#[test]
fn clustering_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts = random_points(&mut rng, 50, 4, 2.0);
    let a = select_best_clustering(pts.view(), 0.7, None).unwrap();
    let b = select_best_clustering(pts.view(), 0.7, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_k_is_rejected() {
    let pts = Array2::zeros((3, 2));
    assert!(matches!(
        birch_cluster(pts.view(), 1.0, 0),
        Err(ClusterError::InvalidK { .. })
    ));
    assert!(matches!(
        birch_cluster(pts.view(), 1.0, 4),
        Err(ClusterError::InvalidK { .. })
    ));
}
