//! Initial node feature vectors for AFG nodes.
//!
//! The default provider is a deterministic feature-hashing embedder over the
//! line's tokens. An external provider ingests precomputed vectors keyed by
//! a 64-bit hash of the trimmed line text, so language-model embeddings can
//! be plugged in without this crate running one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::afg::Afg;
use crate::error::EmbedError;
use crate::frontend::lexer::lex;

/// Smallest supported feature dimension.
pub const MIN_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Lexical,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub provider: ProviderKind,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { dim: 64, provider: ProviderKind::Lexical, seed: 0 }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim < MIN_DIM {
            return Err(EmbedError::DimTooSmall { dim: self.dim, min: MIN_DIM });
        }
        Ok(())
    }
}

/// Unseeded FNV-1a over the trimmed text, the lookup key for external
/// vector files.
pub fn text_hash64(text: &str) -> u64 {
    fnv1a(0xcbf2_9ce4_8422_2325, text.trim().as_bytes())
}

fn fnv1a(basis: u64, bytes: &[u8]) -> u64 {
    let mut h = basis;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Feature-hash a source line into a unit vector.
///
/// Each token contributes a signed unit bump at a seeded-hash index; the
/// result is L2-normalized. Empty or token-free text yields the zero vector.
pub fn lexical_embed(text: &str, cfg: &EmbeddingConfig) -> Vec<f64> {
    let mut v = vec![0.0; cfg.dim];
    let basis = 0xcbf2_9ce4_8422_2325u64 ^ cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for tok in lex(text) {
        let h = fnv1a(basis, tok.text.as_bytes());
        let idx = ((h >> 1) % cfg.dim as u64) as usize;
        let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
        v[idx] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Resolves node text to a feature vector.
pub trait FeatureProvider: Sync {
    fn dim(&self) -> usize;
    fn features_for(&self, text: &str) -> Option<Vec<f64>>;
}

pub struct LexicalProvider {
    cfg: EmbeddingConfig,
}

impl LexicalProvider {
    pub fn new(cfg: EmbeddingConfig) -> Result<Self, EmbedError> {
        cfg.validate()?;
        Ok(Self { cfg })
    }
}

impl FeatureProvider for LexicalProvider {
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn features_for(&self, text: &str) -> Option<Vec<f64>> {
        Some(lexical_embed(text, &self.cfg))
    }
}

/// Precomputed vectors keyed by [`text_hash64`] of the trimmed line text.
pub struct ExternalProvider {
    dim: usize,
    table: HashMap<u64, Vec<f64>>,
}

impl ExternalProvider {
    pub fn new(dim: usize, table: HashMap<u64, Vec<f64>>) -> Result<Self, EmbedError> {
        for v in table.values() {
            if v.len() != dim {
                return Err(EmbedError::DimensionMismatch { provider: v.len(), requested: dim });
            }
        }
        Ok(Self { dim, table })
    }
}

impl FeatureProvider for ExternalProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn features_for(&self, text: &str) -> Option<Vec<f64>> {
        self.table.get(&text_hash64(text)).cloned()
    }
}

/// Attach a feature vector to every node; the graph is otherwise unchanged.
pub fn attach_features(afg: &Afg, provider: &dyn FeatureProvider) -> Result<Afg, EmbedError> {
    let mut out = afg.clone();
    for node in &mut out.nodes {
        match provider.features_for(&node.text) {
            Some(v) if v.len() == provider.dim() => node.feature = Some(v),
            Some(v) => {
                return Err(EmbedError::DimensionMismatch {
                    provider: v.len(),
                    requested: provider.dim(),
                })
            }
            None => {
                return Err(EmbedError::MissingEmbedding {
                    line: node.line,
                    text_hash: text_hash64(&node.text),
                })
            }
        }
    }
    Ok(out)
}
