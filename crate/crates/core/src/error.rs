//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Tolerated-parse failure: position plus a short reason.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub fn at(line: u32, col: u32, message: impl Into<String>) -> Self {
        Self { line, col, message: message.into() }
    }
}

/// Malformed AFG text-format input.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("AFG format error on line {line_index}: {message}")]
pub struct FormatError {
    /// 0-based index of the offending input line.
    pub line_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PruneError {
    #[error("target API `{api}` has no callsite in the graph")]
    NoCallsite { api: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EmbedError {
    #[error("embedding dimension {dim} is below the minimum of {min}")]
    DimTooSmall { dim: usize, min: usize },
    #[error("no embedding vector for line {line} (text hash {text_hash:016x})")]
    MissingEmbedding { line: u32, text_hash: u64 },
    #[error("provider dimension {provider} does not match requested {requested}")]
    DimensionMismatch { provider: usize, requested: usize },
}

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch { context: String, expected: usize, got: usize },
    #[error("readout requires at least one API node")]
    NoApiNode,
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("corpus is empty after filtering")]
    EmptyCorpus,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("invalid cluster count {k} for {available} clusterable units")]
    InvalidK { k: usize, available: usize },
    #[error("degenerate clustering: {0}")]
    Degenerate(String),
    #[error("every candidate cluster count was degenerate")]
    AllDegenerate,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("label sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}
