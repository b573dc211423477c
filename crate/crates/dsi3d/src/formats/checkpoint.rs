//! `GDC1` decoder checkpoints: magic, u32 C, D, E, W, L_max, then every
//! parameter tensor as little-endian f32 in declaration order. A JSON
//! sidecar carries the training configuration and docid strategy.

use std::path::{Path, PathBuf};

use dsi3d_core::docid::{Strategy, VOCAB_SIZE};
use dsi3d_core::gendec::{DecoderParams, ModelDims, TrainConfig};
use serde::{Deserialize, Serialize};

use super::{checked_u32, open, put_f32s, read_json, write_bytes, write_json, LeReader};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GDC1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub train: TrainConfig,
    pub strategy: Strategy,
    pub best_epoch: usize,
}

/// `checkpoint.gdc` -> `checkpoint.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the checkpoint and its sidecar. Values are rounded to f32.
pub fn write_checkpoint(path: &Path, params: &DecoderParams, meta: &CheckpointMeta) -> Result<()> {
    let d = &params.dims;
    let mut out = Vec::with_capacity(24 + params.len() * 4);
    out.extend_from_slice(MAGIC);
    for (what, v) in [
        ("C", VOCAB_SIZE),
        ("D", d.descriptor),
        ("E", d.embed),
        ("W", d.hidden),
        ("L_max", d.max_len),
    ] {
        out.extend_from_slice(&checked_u32(path, what, v)?.to_le_bytes());
    }
    put_f32s(&mut out, params.values.iter().map(|&v| v as f32));
    write_bytes(path, &out)?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_checkpoint(path: &Path) -> Result<(DecoderParams, CheckpointMeta)> {
    let mut r = LeReader::new(open(path)?, path);
    r.magic(MAGIC)?;
    let c = r.u32()? as usize;
    if c != VOCAB_SIZE {
        return Err(Error::format(path, format!("vocabulary {c}, expected {VOCAB_SIZE}")));
    }
    let dims = ModelDims {
        descriptor: r.u32()? as usize,
        embed: r.u32()? as usize,
        hidden: r.u32()? as usize,
        max_len: r.u32()? as usize,
    };
    let total = dsi3d_core::gendec::Layout::new(&dims).total();
    let values = r.f32s(total)?.into_iter().map(f64::from).collect();
    r.end()?;
    let params = DecoderParams::from_values(dims, values).map_err(|e| Error::format(path, e.to_string()))?;
    let meta = read_json(&sidecar_path(path))?;
    Ok((params, meta))
}
