use super::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..k)).collect()
}

/// O(n^2) pair-scan Rand index, the independent oracle.
fn rand_index_pair_scan(u: &[usize], v: &[usize]) -> f64 {
    let n = u.len();
    let mut agree = 0u64;
    let mut pairs = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            if (u[i] == u[j]) == (v[i] == v[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / pairs as f64
}

#[test]
fn rand_index_identity_is_one() {
    let labels = vec![0, 0, 1, 2, 2, 1];
    assert_eq!(rand_index(&labels, &labels).unwrap(), 1.0);
}

#[test]
fn rand_index_all_same_vs_all_distinct() {
    let u = vec![0, 0, 0];
    let v = vec![0, 1, 2];
    assert_eq!(rand_index(&u, &v).unwrap(), 0.0);
}

#[test]
fn rand_index_matches_pair_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let n = rng.gen_range(5..=200);
        let ku = rng.gen_range(2..6);
        let kv = rng.gen_range(2..6);
        let u = random_labels(&mut rng, n, ku);
        let v = random_labels(&mut rng, n, kv);
        let got = rand_index(&u, &v).unwrap();
        let want = rand_index_pair_scan(&u, &v);
        assert!((got - want).abs() <= 1e-12, "n={n}: {got} vs {want}");
    }
}

#[test]
fn adjusted_rand_identity_and_relabeling() {
    let u = vec![0, 0, 1, 1, 2, 2, 2];
    assert!((adjusted_rand(&u, &u).unwrap() - 1.0).abs() < 1e-12);
    // Permute cluster ids on one side.
    let v: Vec<usize> = u.iter().map(|&l| [2, 0, 1][l]).collect();
    assert!((adjusted_rand(&u, &v).unwrap() - 1.0).abs() < 1e-12);
    let w = vec![1, 1, 0, 0, 2, 2, 2];
    assert!((adjusted_rand(&u, &w).unwrap() - adjusted_rand(&w, &u).unwrap()).abs() < 1e-12);
}

#[test]
fn adjusted_rand_is_chance_centered() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sum = 0.0;
    let trials = 10_000;
    for _ in 0..trials {
        let u = random_labels(&mut rng, 30, 3);
        let v = random_labels(&mut rng, 30, 4);
        sum += adjusted_rand(&u, &v).unwrap();
    }
    let mean = sum / trials as f64;
    assert!(mean.abs() < 0.01, "mean ARI {mean}");
}

#[test]
fn mutual_info_independent_and_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = random_labels(&mut rng, 50, 4);
    let constant = vec![0usize; 50];
    assert_eq!(mutual_info(&u, &constant).unwrap(), 0.0);

    // U = V with k equal clusters has MI = ln k.
    for k in [2usize, 4, 5] {
        let labels: Vec<usize> = (0..k * 20).map(|i| i % k).collect();
        let mi = mutual_info(&labels, &labels).unwrap();
        assert!((mi - (k as f64).ln()).abs() < 1e-12, "k={k}: {mi}");
    }
}

#[test]
fn mutual_info_is_symmetric_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(10..80);
        let u = random_labels(&mut rng, n, 4);
        let v = random_labels(&mut rng, n, 3);
        let muv = mutual_info(&u, &v).unwrap();
        let mvu = mutual_info(&v, &u).unwrap();
        assert!((muv - mvu).abs() < 1e-12);
        let c = Contingency::from_labels(&u, &v).unwrap();
        let bound = entropy(&c.a, c.n).min(entropy(&c.b, c.n));
        assert!(muv <= bound + 1e-12, "MI {muv} exceeds min entropy {bound}");
    }
}

#[test]
fn ami_identity_is_one() {
    let labels = vec![0, 0, 1, 1, 2, 2, 1, 0];
    assert!((adjusted_mutual_info(&labels, &labels).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn ami_trivial_pair_is_one() {
    let ones = vec![0usize; 6];
    assert_eq!(adjusted_mutual_info(&ones, &ones).unwrap(), 1.0);
}

#[test]
fn expected_mi_matches_permutation_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u: Vec<usize> = (0..40).map(|i| i % 3).collect();
    let mut v = random_labels(&mut rng, 40, 4);
    let c = Contingency::from_labels(&u, &v).unwrap();
    let emi = expected_mutual_info(&c);

    let trials = 20_000;
    let mut values = Vec::with_capacity(trials);
    for _ in 0..trials {
        for i in (1..v.len()).rev() {
            v.swap(i, rng.gen_range(0..=i));
        }
        values.push(mutual_info(&u, &v).unwrap());
    }
    let mean: f64 = values.iter().sum::<f64>() / trials as f64;
    let var: f64 =
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    assert!(
        (emi - mean).abs() <= 3.0 * se,
        "EMI {emi} vs Monte-Carlo {mean} (3se = {})",
        3.0 * se
    );
}

#[test]
fn ami_of_independent_labelings_concentrates_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sum = 0.0;
    let trials = 300;
    for _ in 0..trials {
        let u = random_labels(&mut rng, 60, 3);
        let v = random_labels(&mut rng, 60, 4);
        sum += adjusted_mutual_info(&u, &v).unwrap();
    }
    let mean = sum / trials as f64;
    assert!(mean.abs() < 0.02, "mean AMI {mean}");
}

#[test]
fn length_mismatch_is_rejected() {
    assert!(matches!(
        rand_index(&[0, 1], &[0, 1, 2]),
        Err(EvalError::LengthMismatch { .. })
    ));
}

fn toy_clustering(sizes: &[usize]) -> (ClusteringResult, Array2<f64>, Vec<String>) {
    // One centroid per cluster on a line, historic points replicated.
    let mut labels = Vec::new();
    let mut centroids = Vec::new();
    for (c, &s) in sizes.iter().enumerate() {
        centroids.push(vec![c as f64 * 10.0]);
        labels.extend(std::iter::repeat(c).take(s));
    }
    let clustering = ClusteringResult {
        labels,
        k: sizes.len(),
        centroids,
        sizes: sizes.to_vec(),
        db_score: 0.0,
        birch_threshold: 3.0,
    };
    // Detection inputs: one embedding exactly on each centroid.
    let emb = Array2::from_shape_fn((sizes.len(), 1), |(i, _)| i as f64 * 10.0);
    let ids = (0..sizes.len()).map(|i| format!("ex-{i}")).collect();
    (clustering, emb, ids)
}

#[test]
fn detect_boundary_at_cutoff() {
    // 100 historic examples; at 10% a size-10 cluster is large, size-9 is not.
    let (clustering, emb, ids) = toy_clustering(&[10, 9, 81]);
    let report = detect(&ids, emb.view(), &clustering, 10.0);
    assert_eq!(report.total, 100);
    assert_eq!(report.rows[0].verdict, Verdict::CorrectUse);
    assert_eq!(report.rows[1].verdict, Verdict::PotentialMisuse);
    assert_eq!(report.rows[2].verdict, Verdict::CorrectUse);
}

#[test]
fn zero_threshold_flags_nothing() {
    let (clustering, emb, ids) = toy_clustering(&[1, 1, 5]);
    let report = detect(&ids, emb.view(), &clustering, 0.0);
    assert!(report.rows.iter().all(|r| r.verdict == Verdict::CorrectUse));
}

#[test]
fn verdict_rule_holds_for_every_row() {
    let (clustering, emb, ids) = toy_clustering(&[3, 7, 2, 18]);
    for pct in DEFAULT_SWEEP_GRID {
        let report = detect(&ids, emb.view(), &clustering, pct);
        let cutoff = size_cutoff(pct, report.total);
        for row in &report.rows {
            assert_eq!(row.verdict == Verdict::PotentialMisuse, row.cluster_size < cutoff);
        }
    }
}

#[test]
fn confusion_all_correct() {
    let m = confusion_metrics(&[true, false, true], &[true, false, true]);
    assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn confusion_all_misuse_on_balanced_data() {
    let pred = vec![true; 10];
    let truth: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
    let m = confusion_metrics(&pred, &truth);
    assert_eq!(m.recall, 1.0);
    assert_eq!(m.precision, 0.5);
    assert_eq!(m.accuracy, 0.5);
    assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn confusion_no_predicted_positives_is_flagged() {
    let m = confusion_metrics(&[false, false], &[true, false]);
    assert!(m.undefined_precision);
    assert_eq!(m.precision, 0.0);
    assert_eq!(m.f1, 0.0);
}

#[test]
fn sweep_has_one_row_per_pct_and_matches_single() {
    let (clustering, emb, ids) = toy_clustering(&[10, 2, 8]);
    let truth = vec![false, true, false];
    let rows = threshold_sweep(&ids, emb.view(), &clustering, &truth, &DEFAULT_SWEEP_GRID);
    assert_eq!(rows.len(), 8);
    let single = threshold_sweep(&ids, emb.view(), &clustering, &truth, &[25.0]);
    assert_eq!(single.len(), 1);
    let report = detect(&ids, emb.view(), &clustering, 25.0);
    let predicted: Vec<bool> =
        report.rows.iter().map(|r| r.verdict == Verdict::PotentialMisuse).collect();
    assert_eq!(single[0].metrics, confusion_metrics(&predicted, &truth));
}

#[test]
fn misuse_recall_is_monotone_in_threshold() {
    let (clustering, emb, ids) = toy_clustering(&[12, 6, 3, 2, 1]);
    let truth = vec![false, false, true, true, true];
    let rows = threshold_sweep(&ids, emb.view(), &clustering, &truth, &DEFAULT_SWEEP_GRID);
    for pair in rows.windows(2) {
        assert!(
            pair[1].metrics.recall >= pair[0].metrics.recall - 1e-12,
            "recall dropped between {}% and {}%",
            pair[0].threshold_pct,
            pair[1].threshold_pct
        );
    }
}

#[test]
fn raising_threshold_never_unflags() {
    let (clustering, emb, ids) = toy_clustering(&[9, 4, 2, 15]);
    let mut flagged_before: Vec<bool> = vec![false; ids.len()];
    for pct in DEFAULT_SWEEP_GRID {
        let report = detect(&ids, emb.view(), &clustering, pct);
        for (i, row) in report.rows.iter().enumerate() {
            let flagged = row.verdict == Verdict::PotentialMisuse;
            assert!(
                flagged || !flagged_before[i],
                "{} unflagged at {pct}%",
                row.id
            );
            flagged_before[i] = flagged;
        }
    }
}
