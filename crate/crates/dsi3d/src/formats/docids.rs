//! Docid tables (`scene_index,docid,strategy` CSV) and their `CodecMeta`
//! JSON sidecar. Offsets and scale are stored as decimal strings that parse
//! back to the identical `f64`.

use std::io::Write;
use std::path::{Path, PathBuf};

use dsi3d_core::docid::{CodecMeta, Docid, Strategy};
use serde::{Deserialize, Serialize};

use super::{create, finish, open, read_json, write_json};
use crate::error::{Error, Result};

/// Sidecar path for a docid table: `docids.csv` -> `docids.meta.json`.
pub fn meta_path(table: &Path) -> PathBuf {
    table.with_extension("meta.json")
}

pub fn write_docids(path: &Path, docids: &[Docid]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "scene_index,docid,strategy").map_err(io)?;
    for (i, d) in docids.iter().enumerate() {
        writeln!(w, "{i},{},{}", d.as_str(), d.strategy.as_str()).map_err(io)?;
    }
    finish(path, w)
}

#[derive(Deserialize)]
struct Row {
    scene_index: usize,
    docid: String,
    strategy: String,
}

pub fn read_docids(path: &Path) -> Result<Vec<Docid>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let bad = |message: String| Error::Parse {
            path: path.into(),
            line: i + 2,
            message,
        };
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.scene_index != i {
            return Err(bad(format!("scene_index {} out of order", row.scene_index)));
        }
        let strategy = Strategy::parse(&row.strategy).ok_or_else(|| bad(format!("unknown strategy {:?}", row.strategy)))?;
        if row.docid.is_empty() || !row.docid.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(format!("docid {:?} is not a digit string", row.docid)));
        }
        out.push(Docid::new(row.docid, strategy));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetaFile {
    strategy: Strategy,
    x_offset: String,
    y_offset: String,
    scale: String,
    digit_width: usize,
    hilbert_order: u32,
    kmeans_k: usize,
    kmeans_seed: u64,
    leaf_size: usize,
    suffix_width: usize,
}

pub fn write_meta(path: &Path, meta: &CodecMeta) -> Result<()> {
    let file = MetaFile {
        strategy: meta.strategy,
        x_offset: meta.x_offset.to_string(),
        y_offset: meta.y_offset.to_string(),
        scale: meta.scale.to_string(),
        digit_width: meta.digit_width,
        hilbert_order: meta.hilbert_order,
        kmeans_k: meta.kmeans_k,
        kmeans_seed: meta.kmeans_seed,
        leaf_size: meta.leaf_size,
        suffix_width: meta.suffix_width,
    };
    write_json(path, &file)
}

pub fn read_meta(path: &Path) -> Result<CodecMeta> {
    let f: MetaFile = read_json(path)?;
    let num = |field: &str, s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::format(path, format!("{field} {s:?} is not a finite decimal")))
    };
    Ok(CodecMeta {
        strategy: f.strategy,
        x_offset: num("x_offset", &f.x_offset)?,
        y_offset: num("y_offset", &f.y_offset)?,
        scale: num("scale", &f.scale)?,
        digit_width: f.digit_width,
        hilbert_order: f.hilbert_order,
        kmeans_k: f.kmeans_k,
        kmeans_seed: f.kmeans_seed,
        leaf_size: f.leaf_size,
        suffix_width: f.suffix_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_keeps_leading_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docids.csv");
        let docids = vec![Docid::new("0012".into(), Strategy::Hilbert), Docid::new("9001".into(), Strategy::Hilbert)];
        write_docids(&path, &docids).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "scene_index,docid,strategy\n0,0012,HILBERT\n1,9001,HILBERT\n");
        assert_eq!(read_docids(&path).unwrap(), docids);
    }

    #[test]
    fn meta_offsets_are_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = meta_path(&dir.path().join("docids.csv"));
        assert!(path.ends_with("docids.meta.json"));
        let meta = CodecMeta {
            x_offset: 0.1 + 0.2,
            y_offset: -1_234.567_890_123_4,
            scale: 100.0,
            ..CodecMeta::new(Strategy::Gps)
        };
        write_meta(&path, &meta).unwrap();
        let back = read_meta(&path).unwrap();
        assert_eq!(back.x_offset.to_bits(), meta.x_offset.to_bits());
        assert_eq!(back, meta);
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(raw["x_offset"], "0.30000000000000004");
    }
}
