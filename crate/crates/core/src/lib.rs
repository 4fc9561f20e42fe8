//! API Flow Graph pipeline: parse Java method snippets, build flow graphs,
//! embed them with a self-supervised GNN, cluster the embeddings, and flag
//! likely API misuse from cluster sizes.
//!
//! Stages map to modules:
//!
//! - [`frontend`]: tolerant statement-level parsing and callsite discovery
//! - [`afg`]: graph construction and the textual edge-list format
//! - [`prune`]: restriction to the subgraph relevant to one target API
//! - [`embed`]: initial node feature vectors
//! - [`gnn`]: GCN/RGCN forward, backward, readout, and checkpoints
//! - [`pretrain`]: context-prediction pre-training
//! - [`cluster`]: BIRCH, Davies-Bouldin scoring, and cluster-count search
//! - [`eval`]: external clustering indices and misuse detection reports
//! - [`corpus`]: on-disk record formats shared by the CLI stages

pub mod afg;
pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod frontend;
pub mod gnn;
pub mod pretrain;
pub mod synth;
pub mod prune;

pub use afg::{build_afg, parse_afg, serialize_afg, Afg, AfgEdge, AfgNode, EdgeLabel};
pub use embed::{attach_features, lexical_embed, EmbeddingConfig, ProviderKind};
pub use error::{ClusterError, EmbedError, EvalError, FormatError, GnnError, ParseError, PruneError, TrainError};
pub use frontend::{find_callsites, parse_snippet, ApiCallsite, SourceSnippet, Statement, StatementKind, StatementTree};
pub use prune::{prune, PruneOptions};
