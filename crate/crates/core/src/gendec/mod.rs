//! The generative retriever: a small autoregressive decoder conditioned on a
//! scene descriptor, its losses and training loop, and trie-constrained
//! beam search.

mod adam;
mod beam;
mod loss;
mod model;
mod params;
mod train;

pub use adam::Adam;
pub use beam::{beam_search, retrieve, retrieve_queries, BeamHit, DEFAULT_BEAM_WIDTH};
pub use loss::{
    cross_entropy, descriptor_quadruplet_grad, descriptor_quadruplet_loss, grad, lm_loss, quadruplet_lm_loss,
    triplet_lm_loss, weighted_lm_loss, DescriptorGrads, DescriptorObjective, Differentiable, Objective,
    ParamObjective,
};
pub use model::forward;
pub use params::{DecoderParams, Layout, ModelDims};
pub use train::{
    mean_lm_loss, model_dims, reference_trie, train, train_from, EpochLog, LossKind, TrainConfig, TrainOutcome,
};

/// Vocabulary size C.
pub use crate::docid::VOCAB_SIZE;
