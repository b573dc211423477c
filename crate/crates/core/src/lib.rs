//! Generative retrieval for LiDAR place recognition.
//!
//! Scenes (a pose plus a global descriptor) are mapped to short decimal
//! identifiers, a small autoregressive decoder learns to emit the identifier
//! of a scene from its descriptor, and retrieval is a beam search restricted
//! to the identifiers stored in a prefix trie. Exact cosine search and
//! random-hyperplane LSH are provided as baselines, together with the
//! Hits@N / F1max place-recognition metrics.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, timing and the
//! command-line front-end live in the `dsi3d` crate.
//!
//! Module map:
//!
//! - [`dataset`]: poses, scenes, synthetic trajectories, sequence merging,
//!   split assignment, tuple mining and revisit labels.
//! - [`docid`]: label, semantic (hierarchical k-means), GPS digit-interleave and
//!   Hilbert identifiers, tokenization and the [`docid::DocidTrie`].
//! - [`descindex`]: exact cosine scan and binary LSH with Hamming ranking.
//! - [`gendec`]: the decoder, the four losses, analytic gradients, training and
//!   trie-constrained beam search.
//! - [`eval`]: ground truth, Hits@N, threshold confusion, F1max and timing fits.
#![no_std]

extern crate alloc;

pub mod dataset;
pub mod descindex;
pub mod docid;
pub mod error;
pub mod eval;
pub mod gendec;
pub mod math;
pub mod seed;

mod grid;

pub use error::{Error, Result};
