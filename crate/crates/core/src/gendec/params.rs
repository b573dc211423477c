use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::docid::VOCAB_SIZE;
use crate::{seed, Error, Result};

/// Shape of the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Descriptor dimension D.
    pub descriptor: usize,
    /// Token / projection embedding width E.
    pub embed: usize,
    /// Hidden width W of both dense layers.
    pub hidden: usize,
    /// Longest token sequence (BOS + digits + EOS) the decoder accepts.
    pub max_len: usize,
}

impl ModelDims {
    pub const DEFAULT_EMBED: usize = 64;
    pub const DEFAULT_HIDDEN: usize = 256;

    pub fn new(descriptor: usize, max_docid_len: usize) -> Self {
        ModelDims {
            descriptor,
            embed: Self::DEFAULT_EMBED,
            hidden: Self::DEFAULT_HIDDEN,
            max_len: max_docid_len + 2,
        }
    }

    pub fn vocab(&self) -> usize {
        VOCAB_SIZE
    }
}

/// Offsets of every tensor inside the flat parameter vector, in declaration
/// (and checkpoint) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub token_embedding: Range<usize>,
    pub position_embedding: Range<usize>,
    pub input_weight: Range<usize>,
    pub input_bias: Range<usize>,
    pub hidden1_weight: Range<usize>,
    pub hidden1_bias: Range<usize>,
    pub hidden2_weight: Range<usize>,
    pub hidden2_bias: Range<usize>,
    pub output_weight: Range<usize>,
    pub output_bias: Range<usize>,
}

impl Layout {
    pub fn new(d: &ModelDims) -> Self {
        let c = VOCAB_SIZE;
        let sizes = [
            c * d.embed,
            d.max_len * d.embed,
            d.embed * d.descriptor,
            d.embed,
            d.hidden * 2 * d.embed,
            d.hidden,
            d.hidden * d.hidden,
            d.hidden,
            c * d.hidden,
            c,
        ];
        let mut start = 0;
        let mut r = sizes.map(|n| {
            let range = start..start + n;
            start += n;
            range
        });
        let take = |r: &mut Range<usize>| core::mem::replace(r, 0..0);
        Layout {
            token_embedding: take(&mut r[0]),
            position_embedding: take(&mut r[1]),
            input_weight: take(&mut r[2]),
            input_bias: take(&mut r[3]),
            hidden1_weight: take(&mut r[4]),
            hidden1_bias: take(&mut r[5]),
            hidden2_weight: take(&mut r[6]),
            hidden2_bias: take(&mut r[7]),
            output_weight: take(&mut r[8]),
            output_bias: take(&mut r[9]),
        }
    }

    pub fn total(&self) -> usize {
        self.output_bias.end
    }

    /// `(name, range)` for each tensor in declaration order.
    pub fn tensors(&self) -> [(&'static str, Range<usize>); 10] {
        [
            ("token_embedding", self.token_embedding.clone()),
            ("position_embedding", self.position_embedding.clone()),
            ("input_weight", self.input_weight.clone()),
            ("input_bias", self.input_bias.clone()),
            ("hidden1_weight", self.hidden1_weight.clone()),
            ("hidden1_bias", self.hidden1_bias.clone()),
            ("hidden2_weight", self.hidden2_weight.clone()),
            ("hidden2_bias", self.hidden2_bias.clone()),
            ("output_weight", self.output_weight.clone()),
            ("output_bias", self.output_bias.clone()),
        ]
    }
}

/// Decoder weights stored as one flat vector (see [`Layout`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub dims: ModelDims,
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl DecoderParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let layout = Layout::new(&dims);
        let values = vec![0.0; layout.total()];
        DecoderParams { dims, layout, values }
    }

    /// Gaussian initialization: weights `N(0, 1/fan_in)`, embeddings
    /// `N(0, 0.25)`, biases zero.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut p = Self::zeros(dims);
        let mut rng = seed::named_rng(seed, "decoder-init");
        let l = p.layout.clone();
        let mut fill = |range: Range<usize>, std: f64, values: &mut [f64]| {
            let normal = Normal::new(0.0, std).expect("positive std");
            for v in &mut values[range] {
                *v = normal.sample(&mut rng);
            }
        };
        let inv_sqrt = |n: usize| 1.0 / libm::sqrt(n.max(1) as f64);
        fill(l.token_embedding, 0.5, &mut p.values);
        fill(l.position_embedding, 0.5, &mut p.values);
        fill(l.input_weight, inv_sqrt(dims.descriptor), &mut p.values);
        fill(l.hidden1_weight, inv_sqrt(2 * dims.embed), &mut p.values);
        fill(l.hidden2_weight, inv_sqrt(dims.hidden), &mut p.values);
        fill(l.output_weight, inv_sqrt(dims.hidden), &mut p.values);
        p
    }

    /// Rebuilds parameters from a flat vector in declaration order.
    pub fn from_values(dims: ModelDims, values: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(&dims);
        if values.len() != layout.total() {
            return Err(Error::DimensionMismatch {
                expected: layout.total(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite decoder parameter".into()));
        }
        Ok(DecoderParams { dims, layout, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub(crate) fn slice(&self, r: &Range<usize>) -> &[f64] {
        &self.values[r.clone()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_contiguous() {
        let dims = ModelDims {
            descriptor: 5,
            embed: 3,
            hidden: 4,
            max_len: 6,
        };
        let l = Layout::new(&dims);
        let t = l.tensors();
        assert_eq!(t[0].1.start, 0);
        for w in t.windows(2) {
            assert_eq!(w[0].1.end, w[1].1.start);
        }
        assert_eq!(l.total(), 12 * 3 + 6 * 3 + 3 * 5 + 3 + 4 * 6 + 4 + 16 + 4 + 12 * 4 + 12);
    }

    #[test]
    fn init_is_seeded() {
        let dims = ModelDims::new(8, 4);
        assert_eq!(DecoderParams::init(dims, 1), DecoderParams::init(dims, 1));
        assert_ne!(DecoderParams::init(dims, 1), DecoderParams::init(dims, 2));
        assert!(DecoderParams::from_values(dims, vec![0.0; 3]).is_err());
    }
}
