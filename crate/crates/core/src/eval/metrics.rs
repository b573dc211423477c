use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{revisit_labels, SequenceDataset, Split, NEGATIVE_RADIUS, POSITIVE_RADIUS, REVISIT_WINDOW};
use crate::grid::PlanarGrid;

/// Geometric and temporal rules of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protocol {
    /// A retrieval within this radius of the query is correct.
    pub pos_radius: f64,
    /// An accepted retrieval beyond this radius is a false positive.
    pub neg_radius: f64,
    /// References closer in time than this to the query are ignored.
    pub revisit_window: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            pos_radius: POSITIVE_RADIUS,
            neg_radius: NEGATIVE_RADIUS,
            revisit_window: REVISIT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScoreKind {
    LogProb,
    Cosine,
    /// Negated Hamming distance, so that higher is better like the others.
    NegHamming,
}

/// Ranked candidates for one query; scores descend (higher = better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub query_index: usize,
    pub candidates: Vec<(usize, f64)>,
    pub score_kind: ScoreKind,
}

impl RetrievalRecord {
    pub fn top1(&self) -> Option<(usize, f64)> {
        self.candidates.first().copied()
    }
}

/// Correct reference scenes for each query.
pub type GroundTruth = BTreeMap<usize, BTreeSet<usize>>;

/// For every query in `query_split`: the TRAIN scenes within `radius` that
/// [`temporal_exclusion`] does not rule out.
pub fn ground_truth_build(dataset: &SequenceDataset, query_split: Split, radius: f64, dt: f64) -> GroundTruth {
    let positions = dataset.positions();
    let grid = PlanarGrid::new(&positions, dataset.indices(Split::Train), radius.max(1.0));
    dataset
        .indices(query_split)
        .into_iter()
        .map(|q| {
            let qs = &dataset.scenes[q];
            let excluded = temporal_exclusion(dataset, q, dt);
            let set = grid
                .within(qs.pose.x, qs.pose.y, radius)
                .into_iter()
                .filter(|&r| !excluded(r))
                .collect();
            (q, set)
        })
        .collect()
}

/// Predicate marking the references that may not be returned for `query`:
/// itself and scenes of the same sequence within `dt` seconds of it.
pub fn temporal_exclusion(dataset: &SequenceDataset, query: usize, dt: f64) -> impl Fn(usize) -> bool + '_ {
    let t = dataset.scenes[query].pose.t;
    let seq = dataset.scenes[query].sequence_id;
    move |r| {
        let s = &dataset.scenes[r];
        r == query || (s.sequence_id == seq && libm::fabs(s.pose.t - t) <= dt)
    }
}

/// Fraction of queries with a non-empty ground truth whose top `n` contains
/// a correct scene; `None` when no query is eligible.
pub fn hits_at_n(records: &[RetrievalRecord], ground_truth: &GroundTruth, n: usize) -> Option<f64> {
    let mut eligible = 0usize;
    let mut hits = 0usize;
    for r in records {
        let Some(gt) = ground_truth.get(&r.query_index) else {
            continue;
        };
        if gt.is_empty() {
            continue;
        }
        eligible += 1;
        if r.candidates.iter().take(n).any(|(s, _)| gt.contains(s)) {
            hits += 1;
        }
    }
    (eligible > 0).then(|| hits as f64 / eligible as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `2TP / (2TP + FP + FN)`, zero when undefined.
pub fn f1_score(c: &Confusion) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// What the threshold rule needs to know about one record.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    score: Option<f64>,
    top1_distance: f64,
    is_revisit: bool,
}

fn outcomes(records: &[RetrievalRecord], dataset: &SequenceDataset, protocol: &Protocol) -> Vec<Outcome> {
    let revisit = revisit_labels(dataset, protocol.pos_radius, protocol.revisit_window);
    records
        .iter()
        .map(|r| {
            let (score, top1_distance) = match r.top1() {
                Some((s, score)) => (Some(score), dataset.distance(r.query_index, s)),
                None => (None, f64::INFINITY),
            };
            Outcome {
                score,
                top1_distance,
                is_revisit: revisit[r.query_index].is_revisit,
            }
        })
        .collect()
}

fn confusion_of(outcomes: &[Outcome], threshold: f64, protocol: &Protocol) -> Confusion {
    let mut c = Confusion::default();
    for o in outcomes {
        match o.score {
            Some(s) if s >= threshold => {
                if o.top1_distance <= protocol.pos_radius {
                    c.tp += 1;
                } else if o.top1_distance > protocol.neg_radius {
                    c.fp += 1;
                }
            }
            _ => {
                if o.is_revisit {
                    c.fn_ += 1;
                } else {
                    c.tn += 1;
                }
            }
        }
    }
    c
}

/// Confusion counts when top-1 retrievals scoring at least `threshold` are
/// accepted. Accepted retrievals count as TP within `pos_radius`, FP beyond
/// `neg_radius` and are dropped in between; rejected ones are FN for revisit
/// queries and TN otherwise. Records without candidates are rejected.
pub fn confusion_at_threshold(
    records: &[RetrievalRecord],
    dataset: &SequenceDataset,
    threshold: f64,
    protocol: &Protocol,
) -> Confusion {
    confusion_of(&outcomes(records, dataset, protocol), threshold, protocol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Max {
    pub f1: f64,
    pub threshold: f64,
    pub confusion: Confusion,
}

/// Best F1 over thresholds drawn from the observed top-1 scores plus the
/// two infinite sentinels; ties keep the lowest threshold.
pub fn f1_max(records: &[RetrievalRecord], dataset: &SequenceDataset, protocol: &Protocol) -> F1Max {
    let out = outcomes(records, dataset, protocol);
    let mut thresholds: Vec<f64> = out.iter().filter_map(|o| o.score).collect();
    thresholds.push(f64::NEG_INFINITY);
    thresholds.push(f64::INFINITY);
    thresholds.sort_by(|a, b| a.total_cmp(b));
    thresholds.dedup();
    let mut best: Option<F1Max> = None;
    for t in thresholds {
        let confusion = confusion_of(&out, t, protocol);
        let f1 = f1_score(&confusion);
        if best.is_none_or(|b| f1 > b.f1) {
            best = Some(F1Max {
                f1,
                threshold: t,
                confusion,
            });
        }
    }
    best.expect("the sentinel thresholds are always swept")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: alloc::string::String,
    pub queries: usize,
    /// Queries with at least one correct reference.
    pub eligible_queries: usize,
    pub hits_at_1: Option<f64>,
    pub hits_at_5: Option<f64>,
    pub f1_max: f64,
    pub best_threshold: f64,
    pub confusion: Confusion,
    pub records: Vec<RetrievalRecord>,
}

impl EvalReport {
    pub fn build(
        method: &str,
        records: Vec<RetrievalRecord>,
        dataset: &SequenceDataset,
        ground_truth: &GroundTruth,
        protocol: &Protocol,
    ) -> Self {
        let best = f1_max(&records, dataset, protocol);
        EvalReport {
            method: method.into(),
            queries: records.len(),
            eligible_queries: records
                .iter()
                .filter(|r| ground_truth.get(&r.query_index).is_some_and(|g| !g.is_empty()))
                .count(),
            hits_at_1: hits_at_n(&records, ground_truth, 1),
            hits_at_5: hits_at_n(&records, ground_truth, 5),
            f1_max: best.f1,
            best_threshold: best.threshold,
            confusion: best.confusion,
            records,
        }
    }
}
