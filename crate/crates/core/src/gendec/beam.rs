use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::model::{check_descriptor, embed, head, project, HeadState};
use super::params::DecoderParams;
use crate::dataset::SequenceDataset;
use crate::docid::{DocidTrie, Token, VOCAB_SIZE};
use crate::eval::{temporal_exclusion, RetrievalRecord, ScoreKind};
use crate::{math, Error, Result};

/// Beam width used for retrieval.
pub const DEFAULT_BEAM_WIDTH: usize = 10;

/// A finished hypothesis: a docid in the trie and its summed token
/// log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamHit {
    pub docid: String,
    pub scene_index: usize,
    pub log_prob: f64,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    node: usize,
    text: String,
    log_prob: f64,
    finished: bool,
    // sum of e_i over the prefix, prefix length
    embed_sum: Vec<f64>,
    len: usize,
}

struct Candidate {
    parent: usize,
    digit: Option<u8>,
    log_prob: f64,
    text: String,
    finished: bool,
}

fn rank(a_lp: f64, a_text: &str, b_lp: f64, b_text: &str) -> Ordering {
    b_lp.total_cmp(&a_lp).then_with(|| a_text.cmp(b_text))
}

/// Length-synchronous beam search over the docids in `trie`.
///
/// Each step expands every live hypothesis by the tokens the trie allows
/// after its prefix, scoring with summed log-softmax probabilities. Finished
/// hypotheses stay in the beam and compete with the expansions; the search
/// stops once the beam holds only finished hypotheses. Returns the best
/// `top_k` finished docids, ties broken by ascending docid.
pub fn beam_search(
    params: &DecoderParams,
    descriptor: &[f64],
    trie: &DocidTrie,
    beam_width: usize,
    top_k: usize,
) -> Result<Vec<BeamHit>> {
    check_descriptor(params, descriptor)?;
    if beam_width == 0 {
        return Err(Error::InvalidArgument("beam_width must be at least 1".into()));
    }
    if trie.is_empty() {
        return Err(Error::InvalidArgument("docid trie is empty".into()));
    }
    if trie.max_depth() + 2 > params.dims.max_len {
        return Err(Error::PrefixTooLong {
            len: trie.max_depth() + 1,
            max: params.dims.max_len,
        });
    }
    let e = params.dims.embed;
    let mut u = vec![0.0; e];
    project(params, descriptor, &mut u);
    let mut bos = vec![0.0; e];
    embed(params, Token::Bos.index(), 0, &mut bos);

    let mut beam = vec![Hypothesis {
        node: DocidTrie::ROOT,
        text: String::new(),
        log_prob: 0.0,
        finished: false,
        embed_sum: bos,
        len: 1,
    }];
    let mut st = HeadState::new(params);
    let mut m = vec![0.0; e];
    let mut logp = [0.0; VOCAB_SIZE];
    let mut scratch = vec![0.0; e];

    while beam.iter().any(|h| !h.finished) {
        let mut candidates: Vec<Candidate> = Vec::new();
        for (i, h) in beam.iter().enumerate() {
            if h.finished {
                candidates.push(Candidate {
                    parent: i,
                    digit: None,
                    log_prob: h.log_prob,
                    text: h.text.clone(),
                    finished: true,
                });
                continue;
            }
            let inv = 1.0 / h.len as f64;
            for (mi, si) in m.iter_mut().zip(&h.embed_sum) {
                *mi = si * inv;
            }
            head(params, &u, &m, &mut st);
            math::log_softmax(&st.logits, &mut logp);
            for tok in trie.allowed(h.node) {
                let lp = h.log_prob + logp[tok.index()];
                match tok {
                    Token::Digit(d) => {
                        let mut text = h.text.clone();
                        text.push(char::from(b'0' + d));
                        candidates.push(Candidate {
                            parent: i,
                            digit: Some(d),
                            log_prob: lp,
                            text,
                            finished: false,
                        });
                    }
                    _ => candidates.push(Candidate {
                        parent: i,
                        digit: None,
                        log_prob: lp,
                        text: h.text.clone(),
                        finished: true,
                    }),
                }
            }
        }
        candidates.sort_by(|a, b| rank(a.log_prob, &a.text, b.log_prob, &b.text));
        candidates.truncate(beam_width);

        let mut next = Vec::with_capacity(candidates.len());
        for c in candidates {
            let parent = &beam[c.parent];
            match c.digit {
                Some(d) => {
                    let node = trie.child(parent.node, d).expect("candidate follows a trie edge");
                    embed(params, Token::Digit(d).index(), parent.len, &mut scratch);
                    let mut sum = parent.embed_sum.clone();
                    for (s, v) in sum.iter_mut().zip(&scratch) {
                        *s += v;
                    }
                    next.push(Hypothesis {
                        node,
                        text: c.text,
                        log_prob: c.log_prob,
                        finished: false,
                        embed_sum: sum,
                        len: parent.len + 1,
                    });
                }
                None => next.push(Hypothesis {
                    node: parent.node,
                    text: c.text,
                    log_prob: c.log_prob,
                    finished: c.finished,
                    embed_sum: Vec::new(),
                    len: parent.len,
                }),
            }
        }
        beam = next;
    }

    Ok(beam
        .into_iter()
        .take(top_k)
        .map(|h| BeamHit {
            scene_index: trie.terminal(h.node).expect("finished hypotheses end on a terminal"),
            docid: h.text,
            log_prob: h.log_prob,
        })
        .collect())
}

/// Generative retrieval: a full-width beam search whose hits are filtered by
/// `excluded` (scene indices) and cut to `top_k`.
pub fn retrieve(
    params: &DecoderParams,
    descriptor: &[f64],
    trie: &DocidTrie,
    beam_width: usize,
    top_k: usize,
    excluded: impl Fn(usize) -> bool,
) -> Result<Vec<BeamHit>> {
    let mut hits = beam_search(params, descriptor, trie, beam_width, beam_width)?;
    hits.retain(|h| !excluded(h.scene_index));
    hits.truncate(top_k);
    Ok(hits)
}

/// Runs [`retrieve`] for every `queries` scene of `dataset`, excluding the
/// query and its same-sequence neighbours within `window` seconds.
pub fn retrieve_queries(
    params: &DecoderParams,
    dataset: &SequenceDataset,
    queries: &[usize],
    trie: &DocidTrie,
    beam_width: usize,
    top_k: usize,
    window: f64,
) -> Result<Vec<RetrievalRecord>> {
    queries
        .iter()
        .map(|&q| {
            let hits = retrieve(
                params,
                &dataset.scenes[q].descriptor,
                trie,
                beam_width,
                top_k,
                temporal_exclusion(dataset, q, window),
            )?;
            Ok(RetrievalRecord {
                query_index: q,
                candidates: hits.iter().map(|h| (h.scene_index, h.log_prob)).collect(),
                score_kind: ScoreKind::LogProb,
            })
        })
        .collect()
}
