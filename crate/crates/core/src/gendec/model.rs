//! Decoder forward and reverse passes.
//!
//! For a descriptor `g` and a token prefix `t_0 .. t_{s-1}`:
//!
//! ```text
//! u      = W_in g + b_in                          (E)
//! e_i    = tanh(tok[t_i] + pos[i])                (E)
//! m      = mean(e_0 .. e_{s-1})                   (E)
//! h1     = tanh(W_1 [u; m] + b_1)                 (W)
//! h2     = tanh(W_2 h1 + b_2)                     (W)
//! logits = W_out h2 + b_out                       (C)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use super::params::DecoderParams;
use crate::docid::{Token, VOCAB_SIZE};
use crate::{math, Error, Result};

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn fast_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out = W x + b`, `W` row-major with `out.len()` rows.
#[inline]
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        *o = b[j] + fast_dot(&w[j * n..(j + 1) * n], x);
    }
}

/// Activations of the dense head for one prediction step.
#[derive(Debug, Clone)]
pub(crate) struct HeadState {
    pub z: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: [f64; VOCAB_SIZE],
}

impl HeadState {
    pub fn new(p: &DecoderParams) -> Self {
        HeadState {
            z: vec![0.0; 2 * p.dims.embed],
            h1: vec![0.0; p.dims.hidden],
            h2: vec![0.0; p.dims.hidden],
            logits: [0.0; VOCAB_SIZE],
        }
    }
}

/// Input projection of a descriptor.
pub(crate) fn project(p: &DecoderParams, descriptor: &[f64], u: &mut [f64]) {
    let l = &p.layout;
    affine(p.slice(&l.input_weight), p.slice(&l.input_bias), descriptor, u);
}

/// `tanh(tok[token] + pos[position])`.
pub(crate) fn embed(p: &DecoderParams, token: usize, position: usize, e: &mut [f64]) {
    let dim = p.dims.embed;
    let tok = &p.slice(&p.layout.token_embedding)[token * dim..(token + 1) * dim];
    let pos = &p.slice(&p.layout.position_embedding)[position * dim..(position + 1) * dim];
    for ((o, a), b) in e.iter_mut().zip(tok).zip(pos) {
        *o = libm::tanh(a + b);
    }
}

/// Runs the dense head on `[u; m]`.
pub(crate) fn head(p: &DecoderParams, u: &[f64], m: &[f64], st: &mut HeadState) {
    let l = &p.layout;
    let e = p.dims.embed;
    st.z[..e].copy_from_slice(u);
    st.z[e..].copy_from_slice(m);
    affine(p.slice(&l.hidden1_weight), p.slice(&l.hidden1_bias), &st.z, &mut st.h1);
    st.h1.iter_mut().for_each(|v| *v = libm::tanh(*v));
    affine(p.slice(&l.hidden2_weight), p.slice(&l.hidden2_bias), &st.h1, &mut st.h2);
    st.h2.iter_mut().for_each(|v| *v = libm::tanh(*v));
    affine(p.slice(&l.output_weight), p.slice(&l.output_bias), &st.h2, &mut st.logits);
}

pub(crate) fn check_descriptor(p: &DecoderParams, descriptor: &[f64]) -> Result<()> {
    if descriptor.len() != p.dims.descriptor {
        return Err(Error::DimensionMismatch {
            expected: p.dims.descriptor,
            found: descriptor.len(),
        });
    }
    Ok(())
}

/// Next-token logits after `prefix`.
pub fn forward(params: &DecoderParams, descriptor: &[f64], prefix: &[Token]) -> Result<[f64; VOCAB_SIZE]> {
    check_descriptor(params, descriptor)?;
    if prefix.is_empty() {
        return Err(Error::InvalidArgument("prefix must hold at least BOS".into()));
    }
    if prefix.len() >= params.dims.max_len {
        return Err(Error::PrefixTooLong {
            len: prefix.len(),
            max: params.dims.max_len,
        });
    }
    let dim = params.dims.embed;
    let mut u = vec![0.0; dim];
    project(params, descriptor, &mut u);
    let mut m = vec![0.0; dim];
    let mut e = vec![0.0; dim];
    for (i, t) in prefix.iter().enumerate() {
        embed(params, t.index(), i, &mut e);
        axpy(1.0, &e, &mut m);
    }
    let inv = 1.0 / prefix.len() as f64;
    m.iter_mut().for_each(|v| *v *= inv);
    let mut st = HeadState::new(params);
    head(params, &u, &m, &mut st);
    Ok(st.logits)
}

/// Teacher-forced pass over a whole token sequence, keeping what the
/// reverse pass needs.
pub(crate) struct SequenceTrace {
    tokens: Vec<usize>,
    u: Vec<f64>,
    // (len - 1) x E, e_i for i < len - 1
    embeds: Vec<f64>,
    // per step: z (2E), h1 (W), h2 (W), probs (C)
    z: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    probs: Vec<f64>,
    weights: Option<Vec<f64>>,
    /// Mean cross-entropy over the prediction steps.
    pub loss: f64,
}

/// Runs every prediction step of `tokens = BOS d_1 .. d_n EOS`: step `s`
/// predicts `tokens[s]` from `tokens[..s]`.
pub(crate) fn trace_sequence(
    p: &DecoderParams,
    descriptor: &[f64],
    tokens: &[Token],
    weights: Option<&[f64]>,
) -> Result<SequenceTrace> {
    check_descriptor(p, descriptor)?;
    if tokens.len() < 2 {
        return Err(Error::InvalidArgument("token sequence needs BOS and a target".into()));
    }
    if tokens.len() > p.dims.max_len {
        return Err(Error::PrefixTooLong {
            len: tokens.len() - 1,
            max: p.dims.max_len,
        });
    }
    let (e, w) = (p.dims.embed, p.dims.hidden);
    let steps = tokens.len() - 1;
    let idx: Vec<usize> = tokens.iter().map(|t| t.index()).collect();
    let mut tr = SequenceTrace {
        tokens: idx,
        u: vec![0.0; e],
        embeds: vec![0.0; steps * e],
        z: vec![0.0; steps * 2 * e],
        h1: vec![0.0; steps * w],
        h2: vec![0.0; steps * w],
        probs: vec![0.0; steps * VOCAB_SIZE],
        weights: weights.map(|w| w.to_vec()),
        loss: 0.0,
    };
    project(p, descriptor, &mut tr.u);
    let mut st = HeadState::new(p);
    let mut sum = vec![0.0; e];
    let mut m = vec![0.0; e];
    let mut logp = [0.0; VOCAB_SIZE];
    let mut total = 0.0;
    for s in 0..steps {
        let es = &mut tr.embeds[s * e..(s + 1) * e];
        embed(p, tr.tokens[s], s, es);
        axpy(1.0, es, &mut sum);
        let inv = 1.0 / (s + 1) as f64;
        for (mi, si) in m.iter_mut().zip(&sum) {
            *mi = si * inv;
        }
        head(p, &tr.u, &m, &mut st);
        tr.z[s * 2 * e..(s + 1) * 2 * e].copy_from_slice(&st.z);
        tr.h1[s * w..(s + 1) * w].copy_from_slice(&st.h1);
        tr.h2[s * w..(s + 1) * w].copy_from_slice(&st.h2);
        math::log_softmax(&st.logits, &mut logp);
        let target = tr.tokens[s + 1];
        let weight = tr.weights.as_ref().map_or(1.0, |w| w[target]);
        total += -weight * logp[target];
        for (pr, lp) in tr.probs[s * VOCAB_SIZE..(s + 1) * VOCAB_SIZE].iter_mut().zip(&logp) {
            *pr = libm::exp(*lp);
        }
    }
    tr.loss = total / steps as f64;
    Ok(tr)
}

/// Accumulates `coef * d(trace.loss)/d(params)` into `grad`.
pub(crate) fn backward_sequence(p: &DecoderParams, descriptor: &[f64], tr: &SequenceTrace, coef: f64, grad: &mut [f64]) {
    if coef == 0.0 {
        return;
    }
    let l = &p.layout;
    let (e, w) = (p.dims.embed, p.dims.hidden);
    let steps = tr.tokens.len() - 1;
    let scale = coef / steps as f64;

    let w_out = p.slice(&l.output_weight);
    let w2 = p.slice(&l.hidden2_weight);
    let w1 = p.slice(&l.hidden1_weight);

    let mut dlogits = [0.0; VOCAB_SIZE];
    let mut dh2 = vec![0.0; w];
    let mut dh1 = vec![0.0; w];
    let mut dz = vec![0.0; 2 * e];
    let mut du = vec![0.0; e];
    let mut de = vec![0.0; steps * e];

    for s in 0..steps {
        let target = tr.tokens[s + 1];
        let weight = tr.weights.as_ref().map_or(1.0, |w| w[target]);
        let probs = &tr.probs[s * VOCAB_SIZE..(s + 1) * VOCAB_SIZE];
        for (c, d) in dlogits.iter_mut().enumerate() {
            let y = if c == target { 1.0 } else { 0.0 };
            *d = scale * weight * (probs[c] - y);
        }
        let z = &tr.z[s * 2 * e..(s + 1) * 2 * e];
        let h1 = &tr.h1[s * w..(s + 1) * w];
        let h2 = &tr.h2[s * w..(s + 1) * w];

        // output layer
        dh2.iter_mut().for_each(|v| *v = 0.0);
        for (c, &g) in dlogits.iter().enumerate() {
            axpy(g, h2, &mut grad[l.output_weight.start + c * w..l.output_weight.start + (c + 1) * w]);
            grad[l.output_bias.start + c] += g;
            axpy(g, &w_out[c * w..(c + 1) * w], &mut dh2);
        }
        // hidden 2
        for (d, h) in dh2.iter_mut().zip(h2) {
            *d *= 1.0 - h * h;
        }
        dh1.iter_mut().for_each(|v| *v = 0.0);
        for (j, &g) in dh2.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            axpy(g, h1, &mut grad[l.hidden2_weight.start + j * w..l.hidden2_weight.start + (j + 1) * w]);
            grad[l.hidden2_bias.start + j] += g;
            axpy(g, &w2[j * w..(j + 1) * w], &mut dh1);
        }
        // hidden 1
        for (d, h) in dh1.iter_mut().zip(h1) {
            *d *= 1.0 - h * h;
        }
        dz.iter_mut().for_each(|v| *v = 0.0);
        for (j, &g) in dh1.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            axpy(
                g,
                z,
                &mut grad[l.hidden1_weight.start + j * 2 * e..l.hidden1_weight.start + (j + 1) * 2 * e],
            );
            grad[l.hidden1_bias.start + j] += g;
            axpy(g, &w1[j * 2 * e..(j + 1) * 2 * e], &mut dz);
        }
        axpy(1.0, &dz[..e], &mut du);
        // m_s is the mean of e_0..e_s
        let inv = 1.0 / (s + 1) as f64;
        for i in 0..=s {
            axpy(inv, &dz[e..], &mut de[i * e..(i + 1) * e]);
        }
    }

    let d = p.dims.descriptor;
    for (j, &g) in du.iter().enumerate() {
        axpy(g, descriptor, &mut grad[l.input_weight.start + j * d..l.input_weight.start + (j + 1) * d]);
        grad[l.input_bias.start + j] += g;
    }
    for i in 0..steps {
        let token = tr.tokens[i];
        let ei = &tr.embeds[i * e..(i + 1) * e];
        let dei = &de[i * e..(i + 1) * e];
        let tok = l.token_embedding.start + token * e;
        let pos = l.position_embedding.start + i * e;
        for k in 0..e {
            let g = dei[k] * (1.0 - ei[k] * ei[k]);
            grad[tok + k] += g;
            grad[pos + k] += g;
        }
    }
}
