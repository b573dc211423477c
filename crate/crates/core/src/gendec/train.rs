use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::beam::{retrieve_queries, DEFAULT_BEAM_WIDTH};
use super::loss::Objective;
use super::params::{DecoderParams, ModelDims};
use crate::dataset::{mine_tuples, MiningConfig, SequenceDataset, Split, NEGATIVE_RADIUS, POSITIVE_RADIUS, REVISIT_WINDOW};
use crate::docid::{tokenize, Docid, DocidTrie, TokenSeq};
use crate::eval::{ground_truth_build, hits_at_n};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LossKind {
    Lm,
    Triplet,
    Quadruplet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Tuples mined per query and epoch (TRIPLET / QUADRUPLET).
    pub negatives_per_query: usize,
    pub p_radius: f64,
    pub n_radius: f64,
    /// Beam width of the per-epoch validation retrieval.
    pub beam_width: usize,
    pub revisit_window: f64,
    /// Score VAL Hits@1 after every epoch and keep the best checkpoint.
    pub validate: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.5,
            beta: 0.3,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            loss_kind: LossKind::Quadruplet,
            embed_dim: ModelDims::DEFAULT_EMBED,
            hidden_dim: ModelDims::DEFAULT_HIDDEN,
            negatives_per_query: 1,
            p_radius: POSITIVE_RADIUS,
            n_radius: NEGATIVE_RADIUS,
            beam_width: DEFAULT_BEAM_WIDTH,
            revisit_window: REVISIT_WINDOW,
            validate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Mean objective over the epoch's examples.
    pub train_loss: f64,
    pub val_hits_at_1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: DecoderParams,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy)]
enum Example {
    Scene(usize),
    Tuple { q: usize, p: usize, n: usize, nbis: usize },
}

/// Model shape implied by a dataset, its docids and a config.
pub fn model_dims(dataset: &SequenceDataset, docids: &[Docid], config: &TrainConfig) -> ModelDims {
    let longest = docids.iter().map(Docid::len).max().unwrap_or(1);
    ModelDims {
        descriptor: dataset.descriptor_dim,
        embed: config.embed_dim,
        hidden: config.hidden_dim,
        max_len: longest + 2,
    }
}

/// Trie over the docids of the TRAIN scenes, the retrieval database.
pub fn reference_trie(dataset: &SequenceDataset, docids: &[Docid]) -> Result<DocidTrie> {
    DocidTrie::from_pairs(dataset.indices(Split::Train).into_iter().map(|i| (i, docids[i].as_str())))
}

/// Trains the decoder to emit `docids[i]` from the descriptor of TRAIN scene
/// `i`, with minibatch Adam on the configured objective.
///
/// Each epoch reshuffles the examples; TRIPLET and QUADRUPLET re-mine tuples
/// every epoch and fall back to the plain LM objective for queries without a
/// tuple. With validation on, the parameters with the best VAL Hits@1 are
/// returned (later epochs win ties); otherwise the final ones.
pub fn train(dataset: &SequenceDataset, docids: &[Docid], config: &TrainConfig) -> Result<TrainOutcome> {
    let dims = model_dims(dataset, docids, config);
    train_from(dataset, docids, config, DecoderParams::init(dims, seed::sub_seed(config.seed, "init")))
}

/// [`train`] starting from `initial` instead of a seeded initialization.
pub fn train_from(
    dataset: &SequenceDataset,
    docids: &[Docid],
    config: &TrainConfig,
    initial: DecoderParams,
) -> Result<TrainOutcome> {
    if docids.len() != dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "{} docids for {} scenes",
            docids.len(),
            dataset.len()
        )));
    }
    let train_scenes = dataset.indices(Split::Train);
    if train_scenes.is_empty() {
        return Err(Error::EmptyTrainSplit);
    }
    if config.batch_size == 0 || !(config.alpha >= 0.0 && config.beta >= 0.0) {
        return Err(Error::InvalidArgument("batch_size must be positive and margins non-negative".into()));
    }
    let expected = model_dims(dataset, docids, config);
    if initial.dims.descriptor != expected.descriptor || initial.dims.max_len < expected.max_len {
        return Err(Error::InvalidArgument("initial parameters do not fit the dataset".into()));
    }
    let targets: Vec<TokenSeq> = docids.iter().map(|d| tokenize(d.as_str())).collect::<Result<_>>()?;

    let mut params = initial;
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            params,
            log: Vec::new(),
            best_epoch: 0,
        });
    }

    let validation = if config.validate {
        Some(Validation::new(dataset, docids, config)?)
    } else {
        None
    };

    let mut opt = Adam::new(params.len(), config.learning_rate);
    let mut grad = vec![0.0; params.len()];
    let mut rng = seed::named_rng(config.seed, "train-shuffle");
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, DecoderParams)> = None;

    for epoch in 1..=config.epochs {
        let mut examples = epoch_examples(dataset, &train_scenes, config, epoch);
        examples.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in examples.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for ex in batch {
                let objective = objective(dataset, &targets, config, *ex);
                total += objective.accumulate(&params, &mut grad)?;
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            opt.step(&mut params.values, &grad);
        }
        let val = match &validation {
            Some(v) => v.hits_at_1(&params)?,
            None => None,
        };
        log.push(EpochLog {
            epoch,
            train_loss: total / examples.len() as f64,
            val_hits_at_1: val,
        });
        if let Some(h) = val {
            if best.as_ref().is_none_or(|(b, _, _)| h >= *b) {
                best = Some((h, epoch, params.clone()));
            }
        }
    }

    Ok(match best {
        Some((_, epoch, p)) => TrainOutcome {
            params: p,
            log,
            best_epoch: epoch,
        },
        None => TrainOutcome {
            params,
            best_epoch: config.epochs,
            log,
        },
    })
}

fn epoch_examples(dataset: &SequenceDataset, train_scenes: &[usize], config: &TrainConfig, epoch: usize) -> Vec<Example> {
    if config.loss_kind == LossKind::Lm {
        return train_scenes.iter().map(|&s| Example::Scene(s)).collect();
    }
    let mining = MiningConfig {
        p_radius: config.p_radius,
        n_radius: config.n_radius,
        negatives_per_query: config.negatives_per_query.max(1),
        seed: seed::sub_seed(config.seed, &format!("tuples-{epoch}")),
    };
    let tuples = mine_tuples(dataset, &mining).unwrap_or_default();
    let mut covered = vec![false; dataset.len()];
    let mut out: Vec<Example> = tuples
        .iter()
        .map(|t| {
            covered[t.q] = true;
            Example::Tuple {
                q: t.q,
                p: t.p,
                n: t.n,
                nbis: t.nbis,
            }
        })
        .collect();
    out.extend(train_scenes.iter().filter(|&&s| !covered[s]).map(|&s| Example::Scene(s)));
    out
}

fn objective<'a>(dataset: &'a SequenceDataset, targets: &'a [TokenSeq], config: &TrainConfig, ex: Example) -> Objective<'a> {
    let d = |i: usize| dataset.scenes[i].descriptor.as_slice();
    match ex {
        Example::Scene(s) => Objective::Lm {
            descriptor: d(s),
            target: &targets[s],
        },
        Example::Tuple { q, p, n, nbis } => match config.loss_kind {
            LossKind::Triplet => Objective::Triplet {
                q: d(q),
                p: d(p),
                n: d(n),
                target: &targets[q],
                alpha: config.alpha,
            },
            _ => Objective::Quadruplet {
                q: d(q),
                p: d(p),
                n: d(n),
                nbis: d(nbis),
                target: &targets[q],
                alpha: config.alpha,
                beta: config.beta,
            },
        },
    }
}

struct Validation<'a> {
    dataset: &'a SequenceDataset,
    trie: DocidTrie,
    queries: Vec<usize>,
    ground_truth: crate::eval::GroundTruth,
    beam_width: usize,
    window: f64,
}

impl<'a> Validation<'a> {
    fn new(dataset: &'a SequenceDataset, docids: &[Docid], config: &TrainConfig) -> Result<Self> {
        let ground_truth = ground_truth_build(dataset, Split::Val, config.p_radius, config.revisit_window);
        let queries = ground_truth
            .iter()
            .filter(|(_, g)| !g.is_empty())
            .map(|(q, _)| *q)
            .collect();
        Ok(Validation {
            dataset,
            trie: reference_trie(dataset, docids)?,
            queries,
            ground_truth,
            beam_width: config.beam_width.max(1),
            window: config.revisit_window,
        })
    }

    fn hits_at_1(&self, params: &DecoderParams) -> Result<Option<f64>> {
        if self.queries.is_empty() {
            return Ok(None);
        }
        let records = retrieve_queries(params, self.dataset, &self.queries, &self.trie, self.beam_width, 1, self.window)?;
        Ok(hits_at_n(&records, &self.ground_truth, 1))
    }
}

/// Mean [`super::lm_loss`] of `scenes` against their docids.
pub fn mean_lm_loss(params: &DecoderParams, dataset: &SequenceDataset, docids: &[Docid], scenes: &[usize]) -> Result<f64> {
    if scenes.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &s in scenes {
        let t = tokenize(docids[s].as_str())?;
        total += super::lm_loss(params, &dataset.scenes[s].descriptor, &t)?;
    }
    Ok(total / scenes.len() as f64)
}
