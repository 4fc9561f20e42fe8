//! GCN and RGCN encoders over AFGs: forward pass, exact reverse-mode
//! gradients, API-node readout, and parameter initialization.
//!
//! Both variants run `k` layers of width `d` (input, hidden, and output
//! dims all equal). Messages flow along edge direction: a node aggregates
//! from its in-neighbors. The GCN uses the symmetrically normalized
//! adjacency with self-loops and ignores edge labels; the RGCN keeps one
//! weight matrix per relation plus a self weight, with per-relation mean
//! normalization.

mod checkpoint;

pub use checkpoint::{load_params, save_params, CHECKPOINT_VERSION};

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::afg::{Afg, EdgeLabel};
use crate::error::GnnError;

/// Paper-default encoder depth.
pub const DEFAULT_LAYERS: usize = 5;

/// Relation order used everywhere weights are indexed by label.
pub const RELATIONS: [EdgeLabel; 3] = [EdgeLabel::Fd, EdgeLabel::Cd, EdgeLabel::Se];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gcn,
    Rgcn,
}

impl Variant {
    pub fn relation_count(self) -> usize {
        match self {
            Variant::Gcn => 0,
            Variant::Rgcn => RELATIONS.len(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Gcn => "gcn",
            Variant::Rgcn => "rgcn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gcn" => Some(Variant::Gcn),
            "rgcn" => Some(Variant::Rgcn),
            _ => None,
        }
    }
}

/// One layer's weights. For GCN, `w_self` is the single weight matrix and
/// `w_rel` is empty; for RGCN, `w_self` is W0 and `w_rel` holds one matrix
/// per relation in [`RELATIONS`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_self: Array2<f64>,
    pub w_rel: Vec<Array2<f64>>,
    pub bias: Array1<f64>,
}

/// A stack of layers; doubles as the container for parameter gradients,
/// which always mirror the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub layers: Vec<LayerParams>,
}

impl Encoder {
    pub fn zeros(variant: Variant, dim: usize, layers: usize) -> Self {
        let layer = LayerParams {
            w_self: Array2::zeros((dim, dim)),
            w_rel: vec![Array2::zeros((dim, dim)); variant.relation_count()],
            bias: Array1::zeros(dim),
        };
        Encoder { layers: vec![layer; layers] }
    }

    pub fn zeros_like(&self) -> Self {
        Encoder {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    w_self: Array2::zeros(l.w_self.raw_dim()),
                    w_rel: l.w_rel.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    /// All parameters as flat slices, in a fixed traversal order.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.w_self.as_slice().expect("standard layout"));
            for w in &l.w_rel {
                out.push(w.as_slice().expect("standard layout"));
            }
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.w_self.as_slice_mut().expect("standard layout"));
            for w in &mut l.w_rel {
                out.push(w.as_slice_mut().expect("standard layout"));
            }
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// `self += rhs * scale`, shape-for-shape.
    pub fn add_scaled(&mut self, rhs: &Encoder, scale: f64) {
        let mut mine = self.param_slices_mut();
        let theirs = rhs.param_slices();
        for (a, b) in mine.iter_mut().zip(theirs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * scale;
            }
        }
    }
}

/// Full model: the main encoder plus the independent context encoder used
/// by pre-training. Inference uses `main` only.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    pub dim: usize,
    pub main: Encoder,
    pub context: Encoder,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, for both encoders.
    pub fn init(variant: Variant, dim: usize, layers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = |rng: &mut ChaCha8Rng| {
            let a = (3.0 / dim as f64).sqrt();
            let mut layer = || LayerParams {
                w_self: Array2::from_shape_fn((dim, dim), |_| rng.gen_range(-a..a)),
                w_rel: (0..variant.relation_count())
                    .map(|_| Array2::from_shape_fn((dim, dim), |_| rng.gen_range(-a..a)))
                    .collect(),
                bias: Array1::zeros(dim),
            };
            Encoder { layers: (0..layers).map(|_| layer()).collect() }
        };
        let main = encoder(&mut rng);
        let context = encoder(&mut rng);
        ModelParams { variant, dim, main, context }
    }

    pub fn layer_count(&self) -> usize {
        self.main.layers.len()
    }
}

/// Message-passing structure precomputed from an AFG.
#[derive(Debug, Clone)]
pub struct GnnGraph {
    pub n: usize,
    /// Node features, one row per node, in `Afg::nodes` order.
    pub features: Array2<f64>,
    /// Label-blind symmetric-normalized adjacency with self-loops.
    pub gcn_adj: Array2<f64>,
    /// Per-relation in-neighbor mean matrices, [`RELATIONS`] order.
    pub rel_adj: Vec<Array2<f64>>,
    /// Rows of API callsite nodes.
    pub api_rows: Vec<usize>,
}

impl GnnGraph {
    /// Build from an AFG whose nodes all carry `dim`-wide features.
    ///
    /// With `reverse_messages`, aggregation runs against edge direction
    /// (an ablation toggle; off by default).
    pub fn from_afg(afg: &Afg, dim: usize, reverse_messages: bool) -> Result<Self, GnnError> {
        let n = afg.nodes.len();
        if n == 0 {
            return Err(GnnError::Malformed("graph has no nodes".into()));
        }
        let mut features = Array2::zeros((n, dim));
        for (i, node) in afg.nodes.iter().enumerate() {
            let f = node.feature.as_ref().ok_or_else(|| {
                GnnError::Malformed(format!("node at line {} has no features", node.line))
            })?;
            if f.len() != dim {
                return Err(GnnError::DimensionMismatch {
                    context: format!("features of node at line {}", node.line),
                    expected: dim,
                    got: f.len(),
                });
            }
            for (j, &v) in f.iter().enumerate() {
                features[(i, j)] = v;
            }
        }

        // Label-blind binary adjacency; row = target, column = source.
        let mut adj = Array2::<f64>::zeros((n, n));
        let mut rel_in: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; RELATIONS.len()];
        for e in &afg.edges {
            let (src, dst) = if reverse_messages { (e.dst, e.src) } else { (e.src, e.dst) };
            adj[(dst, src)] = 1.0;
            let r = e.label.index();
            if !rel_in[r][dst].contains(&src) {
                rel_in[r][dst].push(src);
            }
        }
        let mut m = adj;
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        let deg: Vec<f64> = (0..n).map(|i| m.row(i).sum()).collect();
        let mut gcn_adj = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    gcn_adj[(i, j)] = m[(i, j)] / (deg[i] * deg[j]).sqrt();
                }
            }
        }

        let rel_adj: Vec<Array2<f64>> = rel_in
            .into_iter()
            .map(|per_node| {
                let mut a = Array2::<f64>::zeros((n, n));
                for (dst, srcs) in per_node.iter().enumerate() {
                    if !srcs.is_empty() {
                        let w = 1.0 / srcs.len() as f64;
                        for &src in srcs {
                            a[(dst, src)] = w;
                        }
                    }
                }
                a
            })
            .collect();

        Ok(GnnGraph {
            n,
            features,
            gcn_adj,
            rel_adj,
            api_rows: afg.api_nodes.iter().copied().collect(),
        })
    }
}

/// Cached activations from a forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Activations per layer; `acts[0]` is the input features.
    pub acts: Vec<Array2<f64>>,
    /// Pre-activation values per layer.
    pub pre_acts: Vec<Array2<f64>>,
    /// Aggregated neighbor features per layer (one per weight matrix).
    aggs: Vec<Vec<Array2<f64>>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("at least the input activation")
    }
}

fn check_dims(graph: &GnnGraph, enc: &Encoder, variant: Variant) -> Result<usize, GnnError> {
    let d = graph.features.ncols();
    for (i, l) in enc.layers.iter().enumerate() {
        if l.w_self.nrows() != d || l.w_self.ncols() != d || l.bias.len() != d {
            return Err(GnnError::DimensionMismatch {
                context: format!("layer {i} weights"),
                expected: d,
                got: l.w_self.nrows(),
            });
        }
        if l.w_rel.len() != variant.relation_count() {
            return Err(GnnError::DimensionMismatch {
                context: format!("layer {i} relation weights"),
                expected: variant.relation_count(),
                got: l.w_rel.len(),
            });
        }
        for w in &l.w_rel {
            if w.nrows() != d || w.ncols() != d {
                return Err(GnnError::DimensionMismatch {
                    context: format!("layer {i} relation weights"),
                    expected: d,
                    got: w.nrows(),
                });
            }
        }
    }
    Ok(d)
}

/// Run `k` layers of message passing, keeping the trace for backward.
pub fn forward(
    graph: &GnnGraph,
    enc: &Encoder,
    variant: Variant,
) -> Result<ForwardTrace, GnnError> {
    check_dims(graph, enc, variant)?;
    let mut acts = vec![graph.features.clone()];
    let mut pre_acts = Vec::with_capacity(enc.layers.len());
    let mut aggs = Vec::with_capacity(enc.layers.len());
    for layer in &enc.layers {
        let h = acts.last().expect("nonempty");
        let (z, layer_aggs) = match variant {
            Variant::Gcn => {
                let agg = graph.gcn_adj.dot(h);
                let z = agg.dot(&layer.w_self) + &layer.bias;
                (z, vec![agg])
            }
            Variant::Rgcn => {
                let mut z = h.dot(&layer.w_self) + &layer.bias;
                let mut layer_aggs = Vec::with_capacity(RELATIONS.len());
                for (r, w) in layer.w_rel.iter().enumerate() {
                    let agg = graph.rel_adj[r].dot(h);
                    z = z + agg.dot(w);
                    layer_aggs.push(agg);
                }
                (z, layer_aggs)
            }
        };
        acts.push(z.mapv(|v| v.max(0.0)));
        pre_acts.push(z);
        aggs.push(layer_aggs);
    }
    Ok(ForwardTrace { acts, pre_acts, aggs })
}

/// Exact gradients of a scalar loss w.r.t. every encoder parameter, given
/// the loss gradient w.r.t. the forward output rows.
pub fn backward(
    graph: &GnnGraph,
    enc: &Encoder,
    variant: Variant,
    trace: &ForwardTrace,
    upstream: &Array2<f64>,
) -> Result<Encoder, GnnError> {
    check_dims(graph, enc, variant)?;
    let mut grads = enc.zeros_like();
    let mut d_h = upstream.clone();
    for l in (0..enc.layers.len()).rev() {
        let mask = trace.pre_acts[l].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let d_z = &d_h * &mask;
        grads.layers[l].bias = d_z.sum_axis(Axis(0));
        match variant {
            Variant::Gcn => {
                grads.layers[l].w_self = trace.aggs[l][0].t().dot(&d_z);
                d_h = graph.gcn_adj.t().dot(&d_z.dot(&enc.layers[l].w_self.t()));
            }
            Variant::Rgcn => {
                grads.layers[l].w_self = trace.acts[l].t().dot(&d_z);
                let mut d_prev = d_z.dot(&enc.layers[l].w_self.t());
                for (r, w) in enc.layers[l].w_rel.iter().enumerate() {
                    grads.layers[l].w_rel[r] = trace.aggs[l][r].t().dot(&d_z);
                    d_prev = d_prev + graph.rel_adj[r].t().dot(&d_z.dot(&w.t()));
                }
                d_h = d_prev;
            }
        }
    }
    Ok(grads)
}

/// Graph-level representation: the API node's embedding row, or the mean
/// of the rows when several callsites invoke the target API.
pub fn readout(output: &Array2<f64>, api_rows: &[usize]) -> Result<Array1<f64>, GnnError> {
    if api_rows.is_empty() {
        return Err(GnnError::NoApiNode);
    }
    let mut acc = Array1::<f64>::zeros(output.ncols());
    for &r in api_rows {
        acc = acc + output.row(r);
    }
    Ok(acc / api_rows.len() as f64)
}

/// End-to-end inference: features -> main encoder -> API-node readout.
pub fn embed_graph(afg: &Afg, params: &ModelParams) -> Result<Array1<f64>, GnnError> {
    let graph = GnnGraph::from_afg(afg, params.dim, false)?;
    let trace = forward(&graph, &params.main, params.variant)?;
    readout(trace.output(), &graph.api_rows)
}
