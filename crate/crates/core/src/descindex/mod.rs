//! Descriptor-space baselines: exact cosine scan and flat binary LSH.

mod exact;
mod lsh;

use alloc::vec::Vec;

use crate::dataset::{SequenceDataset, Split};
use crate::{math, Error, Result};

pub use exact::exact_search;
pub use lsh::{hamming, lsh_build, lsh_search, LshIndex};

/// Row-major `N x D` descriptors tagged with their scene indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    dim: usize,
    data: Vec<f64>,
    ids: Vec<usize>,
    norms: Vec<f64>,
}

impl DescriptorMatrix {
    pub fn new(dim: usize) -> Self {
        DescriptorMatrix {
            dim,
            data: Vec::new(),
            ids: Vec::new(),
            norms: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        DescriptorMatrix {
            dim,
            data: Vec::with_capacity(dim * rows),
            ids: Vec::with_capacity(rows),
            norms: Vec::with_capacity(rows),
        }
    }

    pub fn push(&mut self, scene_index: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "descriptor of scene {scene_index} is not finite"
            )));
        }
        self.data.extend_from_slice(row);
        self.ids.push(scene_index);
        self.norms.push(math::norm(row));
        Ok(())
    }

    /// The descriptors of every scene in `split`.
    pub fn from_split(dataset: &SequenceDataset, split: Split) -> Self {
        let members = dataset.indices(split);
        let mut m = DescriptorMatrix::with_capacity(dataset.descriptor_dim, members.len());
        for i in members {
            m.push(i, &dataset.scenes[i].descriptor)
                .expect("dataset descriptors are validated on construction");
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub(crate) fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.ids.iter().copied().zip(self.data.chunks_exact(self.dim.max(1)))
    }
}

/// Keeps the best `k` of `scored` under `better` and returns them sorted.
pub(crate) fn top_k<T>(mut scored: Vec<T>, k: usize, better: impl Fn(&T, &T) -> core::cmp::Ordering) -> Vec<T> {
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, &better);
        scored.truncate(k);
    }
    scored.sort_unstable_by(better);
    scored
}
