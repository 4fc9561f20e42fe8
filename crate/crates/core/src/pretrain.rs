//! Self-supervised context-prediction pre-training on raw AFGs.
//!
//! For an anchor-eligible center node `v`, the main encoder embeds the
//! K1-hop neighborhood subgraph and the context encoder embeds the ring of
//! nodes at hop distance [r1, r2]; the dot product of the center row with
//! the mean anchor row is pushed up for a node's own context and down for
//! a swapped-in context from another center. Training uses Adam and stops
//! once validation accuracy has not improved for `patience` epochs.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afg::{Afg, AfgEdge};
use crate::error::TrainError;
use crate::gnn::{backward, forward, Encoder, GnnGraph, ModelParams, Variant, DEFAULT_LAYERS};

/// Samples processed per deterministic reduction chunk; partial gradient
/// sums are combined in chunk order regardless of worker scheduling.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub adam_eps: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Neighborhood radius (hops).
    pub k1: usize,
    /// Context ring inner and outer radii (hops).
    pub r1: usize,
    pub r2: usize,
    /// Negative samples per positive.
    pub negatives: usize,
    pub seed: u64,
    pub dim: usize,
    pub layers: usize,
    pub variant: Variant,
}

impl Default for TrainConfig {
    /// Desk-scale profile: batch 64 at 64 dims. Optimizer constants follow
    /// the reference setup (Adam, lr 5e-5, eps 1e-8, patience 5).
    fn default() -> Self {
        Self {
            lr: 5e-5,
            batch: 64,
            adam_eps: 1e-8,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            patience: 5,
            max_epochs: 50,
            k1: 2,
            r1: 1,
            r2: 3,
            negatives: 1,
            seed: 0,
            dim: 64,
            layers: DEFAULT_LAYERS,
            variant: Variant::Rgcn,
        }
    }
}

impl TrainConfig {
    /// Full-size profile: batch 256 at 256 dims.
    pub fn paper_parity() -> Self {
        Self { batch: 256, dim: 256, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        // The neighborhood and context ring must overlap so anchors exist.
        if !(self.r1 <= self.k1 && self.k1 <= self.r2) {
            return Err(TrainError::InvalidConfig(format!(
                "need r1 <= K1 <= r2, got r1={} K1={} r2={}",
                self.r1, self.k1, self.r2
            )));
        }
        if self.r1 == 0 {
            return Err(TrainError::InvalidConfig("r1 must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(TrainError::InvalidConfig("patience must be at least 1".into()));
        }
        if self.negatives == 0 {
            return Err(TrainError::InvalidConfig("need at least one negative per positive".into()));
        }
        if self.batch == 0 || self.max_epochs == 0 || self.layers == 0 {
            return Err(TrainError::InvalidConfig("batch, epochs, and layers must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Keep only graphs with at least three edges.
pub fn filter_corpus(corpus: &[Afg]) -> Vec<Afg> {
    corpus.iter().filter(|g| g.edges.len() >= 3).cloned().collect()
}

/// One classification sample: the neighborhood of `(graph, center)` paired
/// with the context ring of `(context_graph, context_center)`. Positive
/// samples pair a center with its own context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSample {
    pub graph: usize,
    pub center: usize,
    pub context_graph: usize,
    pub context_center: usize,
    pub label: bool,
    /// Nodes within K1 hops of the center (its own graph).
    pub neighborhood: Vec<usize>,
    /// Nodes at hop distance [r1, r2] of the context center.
    pub context: Vec<usize>,
    /// Context nodes shared with the context center's neighborhood.
    pub anchors: Vec<usize>,
}

/// Per-center precomputed subgraphs for one AFG.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    /// Node ids with a nonempty anchor set.
    pub eligible: Vec<usize>,
    centers: Vec<Option<PreparedCenter>>,
}

#[derive(Debug, Clone)]
struct PreparedCenter {
    neighborhood: Vec<usize>,
    context: Vec<usize>,
    anchors: Vec<usize>,
    nb_graph: GnnGraph,
    center_row: usize,
    ctx_graph: GnnGraph,
    anchor_rows: Vec<usize>,
}

/// Hop distances over the undirected skeleton, `usize::MAX` = unreachable.
fn bfs_distances(n: usize, edges: &[AfgEdge], start: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        if e.src != e.dst {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
    }
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

fn induced_graph(afg: &Afg, keep: &[usize], dim: usize) -> Result<GnnGraph, TrainError> {
    let mut remap = vec![usize::MAX; afg.nodes.len()];
    for (row, &i) in keep.iter().enumerate() {
        remap[i] = row;
    }
    let sub = Afg {
        nodes: keep.iter().map(|&i| afg.nodes[i].clone()).collect(),
        edges: afg
            .edges
            .iter()
            .filter(|e| remap[e.src] != usize::MAX && remap[e.dst] != usize::MAX)
            .map(|e| AfgEdge { src: remap[e.src], dst: remap[e.dst], label: e.label })
            .collect(),
        api_nodes: Default::default(),
    };
    Ok(GnnGraph::from_afg(&sub, dim, false)?)
}

impl PreparedGraph {
    pub fn new(afg: &Afg, cfg: &TrainConfig) -> Result<Self, TrainError> {
        let n = afg.nodes.len();
        let mut centers: Vec<Option<PreparedCenter>> = vec![None; n];
        let mut eligible = Vec::new();
        for v in 0..n {
            let dist = bfs_distances(n, &afg.edges, v);
            let neighborhood: Vec<usize> = (0..n).filter(|&u| dist[u] <= cfg.k1).collect();
            let context: Vec<usize> =
                (0..n).filter(|&u| dist[u] >= cfg.r1 && dist[u] <= cfg.r2).collect();
            let anchors: Vec<usize> =
                (0..n).filter(|&u| dist[u] >= cfg.r1 && dist[u] <= cfg.k1).collect();
            if anchors.is_empty() {
                continue;
            }
            let nb_graph = induced_graph(afg, &neighborhood, cfg.dim)?;
            let center_row = neighborhood.binary_search(&v).expect("center is 0 hops away");
            let ctx_graph = induced_graph(afg, &context, cfg.dim)?;
            let anchor_rows: Vec<usize> = anchors
                .iter()
                .map(|a| context.binary_search(a).expect("anchors lie in the context"))
                .collect();
            eligible.push(v);
            centers[v] = Some(PreparedCenter {
                neighborhood,
                context,
                anchors,
                nb_graph,
                center_row,
                ctx_graph,
                anchor_rows,
            });
        }
        Ok(Self { eligible, centers })
    }

    fn center(&self, v: usize) -> &PreparedCenter {
        self.centers[v].as_ref().expect("eligible center")
    }
}

/// Context samples for one graph: a positive per eligible center plus
/// `cfg.negatives` negatives that swap in another eligible center's
/// context. A graph with a single eligible center yields its positive
/// only; the trainer pairs negatives across the batch instead.
pub fn sample_contexts(
    afg: &Afg,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ContextSample>, TrainError> {
    cfg.validate()?;
    let prepared = PreparedGraph::new(afg, cfg)?;
    let mut out = Vec::new();
    for &v in &prepared.eligible {
        let c = prepared.center(v);
        out.push(ContextSample {
            graph: 0,
            center: v,
            context_graph: 0,
            context_center: v,
            label: true,
            neighborhood: c.neighborhood.clone(),
            context: c.context.clone(),
            anchors: c.anchors.clone(),
        });
        if prepared.eligible.len() < 2 {
            continue;
        }
        for _ in 0..cfg.negatives {
            let other = loop {
                let w = prepared.eligible[rng.gen_range(0..prepared.eligible.len())];
                if w != v {
                    break w;
                }
            };
            let oc = prepared.center(other);
            out.push(ContextSample {
                graph: 0,
                center: v,
                context_graph: 0,
                context_center: other,
                label: false,
                neighborhood: c.neighborhood.clone(),
                context: oc.context.clone(),
                anchors: oc.anchors.clone(),
            });
        }
    }
    Ok(out)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct BatchResult {
    loss_sum: f64,
    correct: usize,
    main_grads: Encoder,
    ctx_grads: Encoder,
}

/// Mean binary cross-entropy of σ(h_v · c) against the sample labels, with
/// accumulated gradients for both encoders.
pub fn context_loss(
    params: &ModelParams,
    batch: &[ContextSample],
    prepared: &[PreparedGraph],
) -> Result<(f64, f64, Encoder, Encoder), TrainError> {
    assert!(!batch.is_empty(), "context_loss needs a nonempty batch");
    let chunks: Vec<&[ContextSample]> = batch.chunks(GRAD_CHUNK).collect();
    let partials: Vec<Result<BatchResult, TrainError>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut main_grads = params.main.zeros_like();
            let mut ctx_grads = params.context.zeros_like();
            let mut loss_sum = 0.0;
            let mut correct = 0usize;
            for s in *chunk {
                let center = prepared[s.graph].center(s.center);
                let ctx = prepared[s.context_graph].center(s.context_center);
                let nb_trace = forward(&center.nb_graph, &params.main, params.variant)?;
                let ctx_trace = forward(&ctx.ctx_graph, &params.context, params.variant)?;
                let h = nb_trace.output().row(center.center_row).to_owned();
                let mut c = ndarray::Array1::<f64>::zeros(params.dim);
                for &r in &ctx.anchor_rows {
                    c = c + ctx_trace.output().row(r);
                }
                c /= ctx.anchor_rows.len() as f64;
                let z = h.dot(&c);
                let y = if s.label { 1.0 } else { 0.0 };
                loss_sum += if s.label { softplus(-z) } else { softplus(z) };
                if (z > 0.0) == s.label {
                    correct += 1;
                }
                let dz = sigmoid(z) - y;

                let mut nb_upstream =
                    Array2::<f64>::zeros((center.nb_graph.n, params.dim));
                for (j, v) in c.iter().enumerate() {
                    nb_upstream[(center.center_row, j)] = dz * v;
                }
                let g_main = backward(
                    &center.nb_graph,
                    &params.main,
                    params.variant,
                    &nb_trace,
                    &nb_upstream,
                )?;
                main_grads.add_scaled(&g_main, 1.0);

                let mut ctx_upstream = Array2::<f64>::zeros((ctx.ctx_graph.n, params.dim));
                let share = dz / ctx.anchor_rows.len() as f64;
                for &r in &ctx.anchor_rows {
                    for (j, v) in h.iter().enumerate() {
                        ctx_upstream[(r, j)] = share * v;
                    }
                }
                let g_ctx = backward(
                    &ctx.ctx_graph,
                    &params.context,
                    params.variant,
                    &ctx_trace,
                    &ctx_upstream,
                )?;
                ctx_grads.add_scaled(&g_ctx, 1.0);
            }
            Ok(BatchResult { loss_sum, correct, main_grads, ctx_grads })
        })
        .collect();

    let mut main_grads = params.main.zeros_like();
    let mut ctx_grads = params.context.zeros_like();
    let mut loss_sum = 0.0;
    let mut correct = 0;
    for partial in partials {
        let p = partial?;
        loss_sum += p.loss_sum;
        correct += p.correct;
        main_grads.add_scaled(&p.main_grads, 1.0);
        ctx_grads.add_scaled(&p.ctx_grads, 1.0);
    }
    let inv = 1.0 / batch.len() as f64;
    let mut mean_main = params.main.zeros_like();
    mean_main.add_scaled(&main_grads, inv);
    let mut mean_ctx = params.context.zeros_like();
    mean_ctx.add_scaled(&ctx_grads, inv);
    Ok((loss_sum * inv, correct as f64 * inv, mean_main, mean_ctx))
}

/// Forward-only accuracy of 0.5-thresholded predictions.
fn score_samples(
    params: &ModelParams,
    samples: &[ContextSample],
    prepared: &[PreparedGraph],
) -> Result<f64, TrainError> {
    let correct: Result<Vec<usize>, TrainError> = samples
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut n = 0usize;
            for s in chunk {
                let center = prepared[s.graph].center(s.center);
                let ctx = prepared[s.context_graph].center(s.context_center);
                let nb = forward(&center.nb_graph, &params.main, params.variant)?;
                let cx = forward(&ctx.ctx_graph, &params.context, params.variant)?;
                let h = nb.output().row(center.center_row);
                let mut c = ndarray::Array1::<f64>::zeros(params.dim);
                for &r in &ctx.anchor_rows {
                    c = c + cx.output().row(r);
                }
                c /= ctx.anchor_rows.len() as f64;
                if (h.dot(&c) > 0.0) == s.label {
                    n += 1;
                }
            }
            Ok(n)
        })
        .collect();
    Ok(correct?.iter().sum::<usize>() as f64 / samples.len() as f64)
}

/// Early-stopping bookkeeping: strict improvement on validation accuracy,
/// earliest epoch wins ties.
#[derive(Debug, Clone)]
pub struct EarlyStop {
    patience: usize,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    stale: usize,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        Self { patience, best_epoch: 0, best_accuracy: f64::NEG_INFINITY, stale: 0 }
    }

    /// Returns `(improved, stop_now)`.
    pub fn observe(&mut self, epoch: usize, accuracy: f64) -> (bool, bool) {
        if accuracy > self.best_accuracy {
            self.best_accuracy = accuracy;
            self.best_epoch = epoch;
            self.stale = 0;
            (true, false)
        } else {
            self.stale += 1;
            (false, self.stale >= self.patience)
        }
    }
}

/// Adam state over both encoders.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m_main: Encoder,
    v_main: Encoder,
    m_ctx: Encoder,
    v_ctx: Encoder,
}

impl Adam {
    pub fn new(params: &ModelParams, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.lr,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            t: 0,
            m_main: params.main.zeros_like(),
            v_main: params.main.zeros_like(),
            m_ctx: params.context.zeros_like(),
            v_ctx: params.context.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, g_main: &Encoder, g_ctx: &Encoder) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (param, (grad, (m, v))) in [
            (&mut params.main, (g_main, (&mut self.m_main, &mut self.v_main))),
            (&mut params.context, (g_ctx, (&mut self.m_ctx, &mut self.v_ctx))),
        ] {
            let mut ps = param.param_slices_mut();
            let gs = grad.param_slices();
            let mut ms = m.param_slices_mut();
            let mut vs = v.param_slices_mut();
            for idx in 0..ps.len() {
                let (p, g) = (&mut ps[idx], gs[idx]);
                let (mm, vv) = (&mut ms[idx], &mut vs[idx]);
                for i in 0..p.len() {
                    mm[i] = self.beta1 * mm[i] + (1.0 - self.beta1) * g[i];
                    vv[i] = self.beta2 * vv[i] + (1.0 - self.beta2) * g[i] * g[i];
                    let m_hat = mm[i] / bc1;
                    let v_hat = vv[i] / bc2;
                    p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub history: Vec<EpochStats>,
}

/// All (graph, center) positives for the given graph indices.
fn positives_of(
    graphs: &[usize],
    prepared: &[PreparedGraph],
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &g in graphs {
        for &v in &prepared[g].eligible {
            out.push((g, v));
        }
    }
    out
}

fn assemble_samples(
    positives: &[(usize, usize)],
    pool: &[(usize, usize)],
    prepared: &[PreparedGraph],
    negatives: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<ContextSample> {
    let mut out = Vec::with_capacity(positives.len() * (1 + negatives));
    for &(g, v) in positives {
        let c = prepared[g].center(v);
        out.push(ContextSample {
            graph: g,
            center: v,
            context_graph: g,
            context_center: v,
            label: true,
            neighborhood: c.neighborhood.clone(),
            context: c.context.clone(),
            anchors: c.anchors.clone(),
        });
        for _ in 0..negatives {
            // Swap in another center's context; the pool is the enclosing
            // batch when it has a second element, the full epoch otherwise.
            let (og, ov) = if pool.len() == 1 {
                pool[0]
            } else {
                loop {
                    let j = rng.gen_range(0..pool.len());
                    if pool[j] != (g, v) {
                        break pool[j];
                    }
                }
            };
            let oc = prepared[og].center(ov);
            out.push(ContextSample {
                graph: g,
                center: v,
                context_graph: og,
                context_center: ov,
                label: false,
                neighborhood: c.neighborhood.clone(),
                context: oc.context.clone(),
                anchors: oc.anchors.clone(),
            });
        }
    }
    out
}

/// Pre-train on a featured AFG corpus.
///
/// The corpus is filtered to graphs with at least three edges and split
/// 8:1:1 into train/test/validation by seeded shuffle. Returns the best
/// validation epoch's parameters and the per-epoch history.
pub fn train(corpus: &[Afg], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let graphs = filter_corpus(corpus);
    if graphs.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5911);
    for i in (1..order.len()).rev() {
        order.swap(i, split_rng.gen_range(0..=i));
    }
    let n = order.len();
    let n_train = (n * 8) / 10;
    let n_test = n / 10;
    let train_ids: Vec<usize> = order[..n_train].to_vec();
    let val_ids: Vec<usize> = order[n_train + n_test..].to_vec();
    if train_ids.is_empty() || val_ids.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }

    let prepared: Result<Vec<PreparedGraph>, TrainError> =
        graphs.iter().map(|g| PreparedGraph::new(g, cfg)).collect();
    let prepared = prepared?;

    let train_pos = positives_of(&train_ids, &prepared);
    let val_pos = positives_of(&val_ids, &prepared);
    if train_pos.len() < 2 || val_pos.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }

    // Validation samples are fixed across epochs for comparability.
    let mut val_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7a11_da7a);
    let val_samples =
        assemble_samples(&val_pos, &val_pos, &prepared, cfg.negatives, &mut val_rng);

    let mut params = ModelParams::init(cfg.variant, cfg.dim, cfg.layers, cfg.seed);
    let mut adam = Adam::new(&params, cfg);
    let mut stopper = EarlyStop::new(cfg.patience);
    let mut best = params.clone();
    let mut history = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0xe9_0c00 + epoch as u64));
        let mut positives = train_pos.clone();
        for i in (1..positives.len()).rev() {
            positives.swap(i, rng.gen_range(0..=i));
        }
        let mut loss_sum = 0.0;
        let mut sample_count = 0usize;
        let mut pos_count = 0usize;
        let mut neg_count = 0usize;
        for chunk in positives.chunks(cfg.batch) {
            let pool: &[(usize, usize)] = if chunk.len() >= 2 { chunk } else { &positives };
            let batch = assemble_samples(chunk, pool, &prepared, cfg.negatives, &mut rng);
            pos_count += chunk.len();
            neg_count += batch.len() - chunk.len();
            let (loss, _acc, g_main, g_ctx) = context_loss(&params, &batch, &prepared)?;
            adam.step(&mut params, &g_main, &g_ctx);
            loss_sum += loss * batch.len() as f64;
            sample_count += batch.len();
        }
        let val_accuracy = score_samples(&params, &val_samples, &prepared)?;
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / sample_count as f64,
            val_accuracy,
            positives: pos_count,
            negatives: neg_count,
        });
        let (improved, stop) = stopper.observe(epoch, val_accuracy);
        if improved {
            best = params.clone();
        }
        if stop {
            break;
        }
    }

    Ok(TrainOutcome {
        params: best,
        best_epoch: stopper.best_epoch,
        best_accuracy: stopper.best_accuracy,
        history,
    })
}

/// Untrained-baseline validation accuracy for a corpus, used to calibrate
/// the chance floor.
pub fn untrained_accuracy(corpus: &[Afg], cfg: &TrainConfig, rounds: usize) -> Result<f64, TrainError> {
    cfg.validate()?;
    let graphs = filter_corpus(corpus);
    if graphs.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let prepared: Result<Vec<PreparedGraph>, TrainError> =
        graphs.iter().map(|g| PreparedGraph::new(g, cfg)).collect();
    let prepared = prepared?;
    let all: Vec<usize> = (0..graphs.len()).collect();
    let positives = positives_of(&all, &prepared);
    if positives.len() < 2 {
        return Err(TrainError::EmptyCorpus);
    }
    let params = ModelParams::init(cfg.variant, cfg.dim, cfg.layers, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf100f);
    let mut correct = 0.0;
    let mut total = 0usize;
    for _ in 0..rounds {
        let samples = assemble_samples(&positives, &positives, &prepared, cfg.negatives, &mut rng);
        correct += score_samples(&params, &samples, &prepared)? * samples.len() as f64;
        total += samples.len();
    }
    Ok(correct / total as f64)
}
