//! Versioned, checksummed binary checkpoint files.
//!
//! Layout: `AFGN` magic, u32 version, u8 variant, u32 dim, u32 layer count,
//! u32 relation count, then both encoders (main, context) as little-endian
//! f64 matrices in row-major order (`w_self`, relation weights, bias per
//! layer), and a trailing SHA-256 over everything before it.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use super::{Encoder, LayerParams, ModelParams, Variant};
use crate::error::GnnError;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"AFGN";

pub fn save_params(params: &ModelParams, path: &Path) -> Result<(), GnnError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.push(match params.variant {
        Variant::Gcn => 0,
        Variant::Rgcn => 1,
    });
    buf.extend_from_slice(&(params.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(params.layer_count() as u32).to_le_bytes());
    buf.extend_from_slice(&(params.variant.relation_count() as u32).to_le_bytes());
    for enc in [&params.main, &params.context] {
        for slice in enc.param_slices() {
            for v in slice {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams, GnnError> {
    let buf = fs::read(path)?;
    if buf.len() < 32 {
        return Err(GnnError::Checksum);
    }
    let (body, digest) = buf.split_at(buf.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(GnnError::Checksum);
    }
    if body.len() < 21 || &body[..4] != MAGIC {
        return Err(GnnError::Malformed("bad magic".into()));
    }
    let version = u32::from_le_bytes(body[4..8].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(GnnError::Version { found: version, expected: CHECKPOINT_VERSION });
    }
    let variant = match body[8] {
        0 => Variant::Gcn,
        1 => Variant::Rgcn,
        v => return Err(GnnError::Malformed(format!("unknown variant tag {v}"))),
    };
    let dim = u32::from_le_bytes(body[9..13].try_into().expect("4 bytes")) as usize;
    let layers = u32::from_le_bytes(body[13..17].try_into().expect("4 bytes")) as usize;
    let relations = u32::from_le_bytes(body[17..21].try_into().expect("4 bytes")) as usize;
    if relations != variant.relation_count() {
        return Err(GnnError::Malformed(format!(
            "variant {} cannot have {relations} relations",
            variant.as_str()
        )));
    }
    let per_layer = dim * dim * (1 + relations) + dim;
    let expected = 21 + 2 * layers * per_layer * 8;
    if body.len() != expected {
        return Err(GnnError::Malformed(format!(
            "payload is {} bytes, expected {expected}",
            body.len()
        )));
    }

    let mut cursor = 21usize;
    let mut next = |count: usize| {
        let vals: Vec<f64> = body[cursor..cursor + count * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        cursor += count * 8;
        vals
    };
    let mut read_encoder = || -> Encoder {
        let layers: Vec<LayerParams> = (0..layers)
            .map(|_| {
                let w_self =
                    Array2::from_shape_vec((dim, dim), next(dim * dim)).expect("sized above");
                let w_rel = (0..relations)
                    .map(|_| {
                        Array2::from_shape_vec((dim, dim), next(dim * dim)).expect("sized above")
                    })
                    .collect();
                let bias = Array1::from_vec(next(dim));
                LayerParams { w_self, w_rel, bias }
            })
            .collect();
        Encoder { layers }
    };
    let main = read_encoder();
    let context = read_encoder();
    Ok(ModelParams { variant, dim, main, context })
}
