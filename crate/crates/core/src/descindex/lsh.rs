use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::{top_k, DescriptorMatrix};
use crate::{seed, Error, Result};

/// Sign-random-projection codes with a flat Hamming scan.
///
/// Hyperplanes are i.i.d. standard Gaussian, stored as `f32` so a serialized
/// index reproduces codes bit for bit. Bit `b` of a code is set iff the
/// projection on hyperplane `b` is `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LshIndex {
    bits: usize,
    dim: usize,
    seed: u64,
    hyperplanes: Vec<f32>,
    words: usize,
    codes: Vec<u64>,
    ids: Vec<usize>,
}

impl LshIndex {
    /// Reassembles an index from its stored parts.
    pub fn from_parts(
        bits: usize,
        dim: usize,
        seed: u64,
        hyperplanes: Vec<f32>,
        codes: Vec<u64>,
        ids: Vec<usize>,
    ) -> Result<Self> {
        let words = bits.div_ceil(64);
        if bits == 0 || hyperplanes.len() != bits * dim || codes.len() != words * ids.len() {
            return Err(Error::InvalidArgument("inconsistent LSH index parts".into()));
        }
        Ok(LshIndex {
            bits,
            dim,
            seed,
            hyperplanes,
            words,
            codes,
            ids,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn hyperplanes(&self) -> &[f32] {
        &self.hyperplanes
    }

    /// 64-bit words per code.
    pub fn words(&self) -> usize {
        self.words
    }

    pub fn code(&self, row: usize) -> &[u64] {
        &self.codes[row * self.words..(row + 1) * self.words]
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Binary code of an arbitrary vector.
    pub fn hash(&self, v: &[f64]) -> Result<Vec<u64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let mut code = alloc::vec![0u64; self.words];
        self.hash_into(v, &mut code);
        Ok(code)
    }

    fn hash_into(&self, v: &[f64], code: &mut [u64]) {
        let dim = self.dim.max(1);
        for (b, plane) in self.hyperplanes.chunks_exact(dim).enumerate() {
            let mut proj = 0.0f64;
            for (p, x) in plane.iter().zip(v) {
                proj += f64::from(*p) * x;
            }
            if proj >= 0.0 {
                code[b / 64] |= 1u64 << (b % 64);
            }
        }
    }
}

/// Hamming distance between two codes of equal length.
#[inline]
pub fn hamming(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

pub fn lsh_build(reference: &DescriptorMatrix, bits: usize, seed: u64) -> Result<LshIndex> {
    if bits == 0 {
        return Err(Error::InvalidArgument("LSH needs at least one bit".into()));
    }
    let dim = reference.dim();
    let mut rng = seed::named_rng(seed, "lsh-hyperplanes");
    let hyperplanes: Vec<f32> = (0..bits * dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g as f32
        })
        .collect();
    let words = bits.div_ceil(64);
    let mut index = LshIndex {
        bits,
        dim,
        seed,
        hyperplanes,
        words,
        codes: alloc::vec![0u64; words * reference.len()],
        ids: reference.ids().to_vec(),
    };
    let mut codes = core::mem::take(&mut index.codes);
    for (row, (_, v)) in reference.rows().enumerate() {
        index.hash_into(v, &mut codes[row * words..(row + 1) * words]);
    }
    index.codes = codes;
    Ok(index)
}

/// Top-`k` references by ascending Hamming distance, ties to the lower scene
/// index, scanning every code.
pub fn lsh_search(
    query: &[f64],
    index: &LshIndex,
    k: usize,
    excluded: impl Fn(usize) -> bool,
) -> Result<Vec<(usize, u32)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let code = index.hash(query)?;
    let scored: Vec<(usize, u32)> = index
        .ids
        .iter()
        .enumerate()
        .filter(|(_, id)| !excluded(**id))
        .map(|(row, &id)| (id, hamming(&code, index.code(row))))
        .collect();
    Ok(top_k(scored, k, |a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0))))
}
