use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::hilbert;
use super::semantic::encode_semantic;
use super::{Docid, Strategy};
use crate::dataset::SequenceDataset;
use crate::math::decimal_width;
use crate::{Error, Result};

/// Everything needed to reproduce (and for GPS, invert) an encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecMeta {
    pub strategy: Strategy,
    /// Added to x before scaling so every coordinate is non-negative.
    pub x_offset: f64,
    pub y_offset: f64,
    /// Integer units per meter; 100 keeps centimeters.
    pub scale: f64,
    /// Zero-padded width of each coordinate (GPS) or of the index (LABEL).
    pub digit_width: usize,
    pub hilbert_order: u32,
    pub kmeans_k: usize,
    pub kmeans_seed: u64,
    pub leaf_size: usize,
    /// Width of the within-cell rank appended when co-located scenes collide;
    /// 0 when the encoding had no collision.
    pub suffix_width: usize,
}

impl CodecMeta {
    pub const DEFAULT_SCALE: f64 = 100.0;
    pub const DEFAULT_K: usize = 10;
    pub const DEFAULT_LEAF_SIZE: usize = 100;

    pub fn new(strategy: Strategy) -> Self {
        CodecMeta {
            strategy,
            x_offset: 0.0,
            y_offset: 0.0,
            scale: Self::DEFAULT_SCALE,
            digit_width: 1,
            hilbert_order: hilbert::DEFAULT_ORDER,
            kmeans_k: Self::DEFAULT_K,
            kmeans_seed: 0,
            leaf_size: Self::DEFAULT_LEAF_SIZE,
            suffix_width: 0,
        }
    }

    /// Fills the dataset-dependent fields: offsets that move the minimum x and
    /// y to zero, and the digit width for LABEL and GPS.
    pub fn fit(mut self, dataset: &SequenceDataset) -> Self {
        if dataset.is_empty() {
            return self;
        }
        let min_x = dataset.scenes.iter().map(|s| s.pose.x).fold(f64::INFINITY, f64::min);
        let min_y = dataset.scenes.iter().map(|s| s.pose.y).fold(f64::INFINITY, f64::min);
        // `0.0 - v` rather than `-v`, so a zero minimum gives +0, not -0.
        self.x_offset = 0.0 - min_x;
        self.y_offset = 0.0 - min_y;
        self.digit_width = match self.strategy {
            Strategy::Label => label_width(dataset.len() - 1),
            Strategy::Gps => {
                let max = dataset
                    .scenes
                    .iter()
                    .filter_map(|s| {
                        let x = quantize(s.pose.x, self.x_offset, self.scale).ok()?;
                        let y = quantize(s.pose.y, self.y_offset, self.scale).ok()?;
                        Some(x.max(y))
                    })
                    .max()
                    .unwrap_or(0);
                decimal_width(max)
            }
            _ => self.digit_width,
        };
        self
    }
}

/// Width of a zero-padded label when the largest index is `max_index`.
pub fn label_width(max_index: usize) -> usize {
    decimal_width(max_index as u64)
}

/// Zero-padded decimal scene index.
pub fn encode_label(scene_index: usize, max_index: usize) -> Docid {
    let width = label_width(max_index.max(scene_index));
    Docid::new(format!("{scene_index:0width$}"), Strategy::Label)
}

fn quantize(v: f64, offset: f64, scale: f64) -> Result<u64> {
    let q = libm::round((v + offset) * scale);
    if !q.is_finite() || !(0.0..1.8e19).contains(&q) {
        return Err(Error::CoordinateOverflow {
            scene: None,
            value: q as i64,
            limit: String::from("the non-negative integer range"),
        });
    }
    Ok(q as u64)
}

/// Interleaves the digits of the zero-padded cells `X` and `Y`, most
/// significant first: `X[0] Y[0] X[1] Y[1] ...`.
pub fn encode_gps(x: f64, y: f64, meta: &CodecMeta) -> Result<Docid> {
    let width = meta.digit_width;
    if width == 0 || width > 19 {
        return Err(Error::InvalidArgument(format!("digit_width {width} outside 1..=19")));
    }
    let limit = 10u64.pow(width as u32);
    let xs = quantize(x, meta.x_offset, meta.scale)?;
    let ys = quantize(y, meta.y_offset, meta.scale)?;
    for v in [xs, ys] {
        if v >= limit {
            return Err(Error::CoordinateOverflow {
                scene: None,
                value: v as i64,
                limit: format!("{width} digits"),
            });
        }
    }
    let xd = format!("{xs:0width$}");
    let yd = format!("{ys:0width$}");
    let mut text = String::with_capacity(2 * width);
    for (a, b) in xd.chars().zip(yd.chars()) {
        text.push(a);
        text.push(b);
    }
    Ok(Docid::new(text, Strategy::Gps))
}

/// Inverse of [`encode_gps`] up to the `1 / scale` quantum. A collision rank
/// suffix of `meta.suffix_width` digits is accepted and ignored.
pub fn decode_gps(docid: &str, meta: &CodecMeta) -> Result<(f64, f64)> {
    let width = meta.digit_width;
    let expected = 2 * width + meta.suffix_width;
    if docid.len() != expected {
        return Err(Error::DocidFormat(format!(
            "GPS docid {docid:?} has length {}, expected {expected}",
            docid.len()
        )));
    }
    if !docid.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::DocidFormat(format!("GPS docid {docid:?} contains a non-digit")));
    }
    let bytes = &docid.as_bytes()[..2 * width];
    let mut xs = 0u64;
    let mut ys = 0u64;
    for pair in bytes.chunks_exact(2) {
        xs = xs * 10 + u64::from(pair[0] - b'0');
        ys = ys * 10 + u64::from(pair[1] - b'0');
    }
    Ok((xs as f64 / meta.scale - meta.x_offset, ys as f64 / meta.scale - meta.y_offset))
}

/// Decimal width of the largest distance at `order`.
pub fn hilbert_width(order: u32) -> Result<usize> {
    Ok(decimal_width(hilbert::cell_count(order)? - 1))
}

/// Hilbert distance of the `(x, y)` cell, zero-padded to [`hilbert_width`].
pub fn encode_hilbert(x: f64, y: f64, meta: &CodecMeta) -> Result<Docid> {
    let order = meta.hilbert_order;
    let width = hilbert_width(order)?;
    let side = 1u64 << order;
    let xs = quantize(x, meta.x_offset, meta.scale)?;
    let ys = quantize(y, meta.y_offset, meta.scale)?;
    for v in [xs, ys] {
        if v >= side {
            return Err(Error::CoordinateOverflow {
                scene: None,
                value: v as i64,
                limit: format!("a 2^{order} grid"),
            });
        }
    }
    let d = hilbert::xy_to_d(xs, ys, order)?;
    Ok(Docid::new(format!("{d:0width$}"), Strategy::Hilbert))
}

/// Docids for every scene of a dataset, with collision bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDocids {
    /// `docids[i]` identifies scene `i`.
    pub docids: Vec<Docid>,
    pub meta: CodecMeta,
    /// Scenes whose base identifier repeated an earlier scene's.
    pub collisions: usize,
}

/// Encodes every scene of `dataset` under `meta.strategy`.
///
/// GPS and HILBERT cells shared by several scenes are disambiguated by a
/// zero-padded within-cell rank appended to every docid (so lengths stay
/// uniform); the number of such collisions is reported.
pub fn encode_dataset(dataset: &SequenceDataset, meta: &CodecMeta) -> Result<EncodedDocids> {
    let mut meta = meta.clone();
    meta.suffix_width = 0;
    let n = dataset.len();
    let base: Vec<Docid> = match meta.strategy {
        Strategy::Label => {
            let width = meta.digit_width.max(label_width(n.saturating_sub(1)));
            meta.digit_width = width;
            (0..n)
                .map(|i| Docid::new(format!("{i:0width$}"), Strategy::Label))
                .collect()
        }
        Strategy::Semantic => {
            let descriptors: Vec<&[f64]> = dataset.scenes.iter().map(|s| s.descriptor.as_slice()).collect();
            encode_semantic(&descriptors, meta.kmeans_k, meta.leaf_size, meta.kmeans_seed)?
        }
        Strategy::Gps | Strategy::Hilbert => {
            let encode = if meta.strategy == Strategy::Gps {
                encode_gps
            } else {
                encode_hilbert
            };
            dataset
                .scenes
                .iter()
                .map(|s| {
                    encode(s.pose.x, s.pose.y, &meta).map_err(|e| match e {
                        Error::CoordinateOverflow { value, limit, .. } => Error::CoordinateOverflow {
                            scene: Some(s.scene_index),
                            value,
                            limit,
                        },
                        other => other,
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &base {
        *groups.entry(d.as_str()).or_default() += 1;
    }
    let collisions = n - groups.len();
    if collisions == 0 {
        return Ok(EncodedDocids {
            docids: base,
            meta,
            collisions,
        });
    }
    let largest = groups.values().copied().max().unwrap_or(1);
    let width = decimal_width((largest - 1) as u64);
    meta.suffix_width = width;
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let docids = base
        .into_iter()
        .map(|d| {
            let rank = seen.entry(d.text.clone()).or_default();
            let text = format!("{}{:0width$}", d.text, *rank);
            *rank += 1;
            Docid::new(text, d.strategy)
        })
        .collect();
    Ok(EncodedDocids {
        docids,
        meta,
        collisions,
    })
}
