use afgnn_core::afg::build_afg;
use afgnn_core::cluster::{select_best_clustering, BIRCH_THRESHOLD_DETECT};
use afgnn_core::embed::{attach_features, EmbeddingConfig, LexicalProvider};
use afgnn_core::eval::{detect, Verdict};
use afgnn_core::frontend::parse_snippet;
use afgnn_core::gnn::embed_graph;
use afgnn_core::pretrain::{train, TrainConfig};
use afgnn_core::prune::{prune, PruneOptions};
use afgnn_core::synth;
use ndarray::Array2;

#[test]
fn probe_criterion_4_and_7() {
    let ecfg = EmbeddingConfig { dim: 64, ..Default::default() };
    let corpus = synth::pretrain_corpus(260, 17, &ecfg);
    println!("corpus: {} graphs", corpus.len());
    for lr in [1e-3, 3e-3, 1e-2] {
        let tcfg = TrainConfig { lr, dim: 64, batch: 64, max_epochs: 50, patience: 5, seed: 17, ..Default::default() };
        let t0 = std::time::Instant::now();
        let out = train(&corpus, &tcfg).unwrap();
        println!("lr={lr}: best={:.4} at epoch {} of {} ({:.1}s)", out.best_accuracy, out.best_epoch, out.history.len(), t0.elapsed().as_secs_f64());
        if lr != 1e-2 { continue; }

        // criterion 7 probe with this checkpoint
        let provider = LexicalProvider::new(ecfg).unwrap();
        let det = synth::detection_snippets(5);
        let mut ids = Vec::new();
        let mut truth = Vec::new();
        let mut embs: Vec<Vec<f64>> = Vec::new();
        for (snippet, misuse) in &det {
            let tree = parse_snippet(snippet).unwrap();
            let raw = build_afg(&tree, Some(synth::DETECTION_API));
            let pruned = prune(&raw, synth::DETECTION_API, PruneOptions::default()).unwrap();
            let feat = attach_features(&pruned, &provider).unwrap();
            let e = embed_graph(&feat, &out.params).unwrap();
            ids.push(snippet.id.clone());
            truth.push(*misuse);
            embs.push(e.to_vec());
        }
        let n = embs.len();
        let d = embs[0].len();
        let matrix = Array2::from_shape_fn((n, d), |(i, j)| embs[i][j]);
        // distance structure
        let mut distinct: Vec<usize> = Vec::new();
        for i in 0..n {
            if !distinct.iter().any(|&j| {
                embs[i].iter().zip(&embs[j]).all(|(a, b)| (a - b).abs() < 1e-9)
            }) { distinct.push(i); }
        }
        println!("distinct embedding points: {}", distinct.len());
        for &i in &distinct {
            let dists: Vec<String> = distinct.iter().map(|&j| {
                let s: f64 = embs[i].iter().zip(&embs[j]).map(|(a,b)| (a-b)*(a-b)).sum();
                format!("{:.2}", s.sqrt())
            }).collect();
            println!("  {} -> [{}]", ids[i], dists.join(", "));
        }
        let norms: Vec<String> = distinct.iter().map(|&i| {
            let s: f64 = embs[i].iter().map(|a| a*a).sum();
            format!("{:.2}", s.sqrt())
        }).collect();
        println!("norms: [{}]", norms.join(", "));
        match select_best_clustering(matrix.view(), BIRCH_THRESHOLD_DETECT, None) {
            Ok(clustering) => {
                println!("K={} sizes={:?} db={:.4}", clustering.k, clustering.sizes, clustering.db_score);
                let report = detect(&ids, matrix.view(), &clustering, 10.0);
                let flagged: Vec<&str> = report.rows.iter().filter(|r| r.verdict == Verdict::PotentialMisuse).map(|r| r.id.as_str()).collect();
                println!("flagged: {flagged:?}");
                let dev_flagged = report.rows.iter().zip(&truth).filter(|(r, &t)| t && r.verdict == Verdict::PotentialMisuse).count();
                let conf_flagged = report.rows.iter().zip(&truth).filter(|(r, &t)| !t && r.verdict == Verdict::PotentialMisuse).count();
                println!("deviants flagged {dev_flagged}/3, conformers flagged {conf_flagged}/27");
            }
            Err(e) => println!("clustering failed: {e}"),
        }
    }
}
