//! Training objectives and their gradients.

use alloc::vec;
use alloc::vec::Vec;

use super::model::{backward_sequence, trace_sequence};
use super::params::DecoderParams;
use crate::docid::{TokenSeq, VOCAB_SIZE};
use crate::{math, Error, Result};

#[inline]
pub(crate) fn hinge(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// `-w[target] * log softmax(logits)[target]`; unit weights when `weights` is
/// `None`.
pub fn cross_entropy(logits: &[f64], target: usize, weights: Option<&[f64]>) -> f64 {
    let lse = math::log_sum_exp(logits);
    let w = weights.map_or(1.0, |w| w[target]);
    w * (lse - logits[target])
}

/// Mean cross-entropy over the digit and EOS predictions of `target`, each
/// step teacher-forced on the true prefix.
pub fn lm_loss(params: &DecoderParams, descriptor: &[f64], target: &TokenSeq) -> Result<f64> {
    Ok(trace_sequence(params, descriptor, target.tokens(), None)?.loss)
}

/// [`lm_loss`] with per-class cross-entropy weights.
pub fn weighted_lm_loss(params: &DecoderParams, descriptor: &[f64], target: &TokenSeq, weights: &[f64]) -> Result<f64> {
    if weights.len() != VOCAB_SIZE {
        return Err(Error::DimensionMismatch {
            expected: VOCAB_SIZE,
            found: weights.len(),
        });
    }
    Ok(trace_sequence(params, descriptor, target.tokens(), Some(weights))?.loss)
}

/// `L_m(q) + [L_m(p) - L_m(n) + alpha]_+`, every branch scored against the
/// query's docid.
pub fn triplet_lm_loss(
    params: &DecoderParams,
    q: &[f64],
    p: &[f64],
    n: &[f64],
    target: &TokenSeq,
    alpha: f64,
) -> Result<f64> {
    Objective::Triplet { q, p, n, target, alpha }.value(params)
}

/// Triplet loss plus `[L_m(p) - L_m(nbis) + beta]_+`.
#[allow(clippy::too_many_arguments)]
pub fn quadruplet_lm_loss(
    params: &DecoderParams,
    q: &[f64],
    p: &[f64],
    n: &[f64],
    nbis: &[f64],
    target: &TokenSeq,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    Objective::Quadruplet {
        q,
        p,
        n,
        nbis,
        target,
        alpha,
        beta,
    }
    .value(params)
}

/// Descriptor-space quadruplet loss over `N = negatives.len()` negatives:
///
/// `sum_i [|q-p|^2 - |q-n_i|^2 + alpha]_+ + [|q-p|^2 - |nbis-n_i|^2 + beta]_+`
pub fn descriptor_quadruplet_loss(q: &[f64], p: &[f64], negatives: &[&[f64]], nbis: &[f64], alpha: f64, beta: f64) -> f64 {
    let pos = math::squared_distance(q, p);
    negatives
        .iter()
        .map(|n| {
            hinge(pos - math::squared_distance(q, n) + alpha) + hinge(pos - math::squared_distance(nbis, n) + beta)
        })
        .sum()
}

/// Gradients of [`descriptor_quadruplet_loss`] with respect to each input.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorGrads {
    pub loss: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
    pub nbis: Vec<f64>,
}

pub fn descriptor_quadruplet_grad(
    q: &[f64],
    p: &[f64],
    negatives: &[&[f64]],
    nbis: &[f64],
    alpha: f64,
    beta: f64,
) -> DescriptorGrads {
    let d = q.len();
    let mut g = DescriptorGrads {
        loss: 0.0,
        q: vec![0.0; d],
        p: vec![0.0; d],
        negatives: vec![vec![0.0; d]; negatives.len()],
        nbis: vec![0.0; d],
    };
    let pos = math::squared_distance(q, p);
    for (i, n) in negatives.iter().enumerate() {
        let first = pos - math::squared_distance(q, n) + alpha;
        let second = pos - math::squared_distance(nbis, n) + beta;
        if first > 0.0 {
            g.loss += first;
            // d|q-p|^2 = 2(q-p) dq ; d|q-n|^2 = 2(q-n) dq
            for k in 0..d {
                g.q[k] += 2.0 * (q[k] - p[k]) - 2.0 * (q[k] - n[k]);
                g.p[k] -= 2.0 * (q[k] - p[k]);
                g.negatives[i][k] += 2.0 * (q[k] - n[k]);
            }
        }
        if second > 0.0 {
            g.loss += second;
            for k in 0..d {
                g.q[k] += 2.0 * (q[k] - p[k]);
                g.p[k] -= 2.0 * (q[k] - p[k]);
                g.nbis[k] -= 2.0 * (nbis[k] - n[k]);
                g.negatives[i][k] += 2.0 * (nbis[k] - n[k]);
            }
        }
    }
    g
}

/// A scalar function of a parameter vector with an analytic gradient.
pub trait Differentiable {
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>);
}

/// Analytic gradient of `loss` at `x`.
pub fn grad<L: Differentiable + ?Sized>(x: &[f64], loss: &L) -> (f64, Vec<f64>) {
    loss.value_and_grad(x)
}

/// One of the decoder training objectives, bound to its inputs.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    Lm {
        descriptor: &'a [f64],
        target: &'a TokenSeq,
    },
    Triplet {
        q: &'a [f64],
        p: &'a [f64],
        n: &'a [f64],
        target: &'a TokenSeq,
        alpha: f64,
    },
    Quadruplet {
        q: &'a [f64],
        p: &'a [f64],
        n: &'a [f64],
        nbis: &'a [f64],
        target: &'a TokenSeq,
        alpha: f64,
        beta: f64,
    },
}

impl Objective<'_> {
    fn branches(&self) -> (&TokenSeq, [Option<&[f64]>; 4]) {
        match *self {
            Objective::Lm { descriptor, target } => (target, [Some(descriptor), None, None, None]),
            Objective::Triplet { q, p, n, target, .. } => (target, [Some(q), Some(p), Some(n), None]),
            Objective::Quadruplet { q, p, n, nbis, target, .. } => (target, [Some(q), Some(p), Some(n), Some(nbis)]),
        }
    }

    /// Total loss and the coefficient of each branch's `L_m` in it.
    fn combine(&self, l: [f64; 4]) -> (f64, [f64; 4]) {
        match *self {
            Objective::Lm { .. } => (l[0], [1.0, 0.0, 0.0, 0.0]),
            Objective::Triplet { alpha, .. } => {
                let m = l[1] - l[2] + alpha;
                if m > 0.0 {
                    (l[0] + m, [1.0, 1.0, -1.0, 0.0])
                } else {
                    (l[0], [1.0, 0.0, 0.0, 0.0])
                }
            }
            Objective::Quadruplet { alpha, beta, .. } => {
                let m1 = l[1] - l[2] + alpha;
                let m2 = l[1] - l[3] + beta;
                let mut total = l[0];
                let mut c = [1.0, 0.0, 0.0, 0.0];
                if m1 > 0.0 {
                    total += m1;
                    c[1] += 1.0;
                    c[2] -= 1.0;
                }
                if m2 > 0.0 {
                    total += m2;
                    c[1] += 1.0;
                    c[3] -= 1.0;
                }
                (total, c)
            }
        }
    }

    pub fn value(&self, params: &DecoderParams) -> Result<f64> {
        let (target, branches) = self.branches();
        let mut l = [0.0; 4];
        for (li, b) in l.iter_mut().zip(branches) {
            if let Some(d) = b {
                *li = trace_sequence(params, d, target.tokens(), None)?.loss;
            }
        }
        Ok(self.combine(l).0)
    }

    /// Loss, with `d loss / d params` added into `grad`.
    pub fn accumulate(&self, params: &DecoderParams, grad: &mut [f64]) -> Result<f64> {
        let (target, branches) = self.branches();
        let mut traces = [None, None, None, None];
        let mut l = [0.0; 4];
        for ((slot, li), b) in traces.iter_mut().zip(l.iter_mut()).zip(branches) {
            if let Some(d) = b {
                let tr = trace_sequence(params, d, target.tokens(), None)?;
                *li = tr.loss;
                *slot = Some((d, tr));
            }
        }
        let (total, coef) = self.combine(l);
        for (t, c) in traces.iter().zip(coef) {
            if let Some((d, tr)) = t {
                backward_sequence(params, d, tr, c, grad);
            }
        }
        Ok(total)
    }

    pub fn value_and_grad_params(&self, params: &DecoderParams) -> Result<(f64, Vec<f64>)> {
        let mut g = vec![0.0; params.len()];
        let loss = self.accumulate(params, &mut g)?;
        Ok((loss, g))
    }
}

/// An [`Objective`] viewed as a function of the flat parameter vector.
pub struct ParamObjective<'a> {
    pub template: &'a DecoderParams,
    pub objective: Objective<'a>,
}

impl Differentiable for ParamObjective<'_> {
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut p = self.template.clone();
        p.values.copy_from_slice(x);
        self.objective
            .value_and_grad_params(&p)
            .expect("objective inputs validated by caller")
    }
}

/// Descriptor quadruplet loss as a function of the concatenation
/// `[q; p; n_1; ..; n_N; nbis]`.
pub struct DescriptorObjective {
    pub dim: usize,
    pub negatives: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Differentiable for DescriptorObjective {
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dim;
        let q = &x[..d];
        let p = &x[d..2 * d];
        let negs: Vec<&[f64]> = (0..self.negatives).map(|i| &x[(2 + i) * d..(3 + i) * d]).collect();
        let nbis = &x[(2 + self.negatives) * d..(3 + self.negatives) * d];
        let g = descriptor_quadruplet_grad(q, p, &negs, nbis, self.alpha, self.beta);
        let mut flat = Vec::with_capacity(x.len());
        flat.extend_from_slice(&g.q);
        flat.extend_from_slice(&g.p);
        for n in &g.negatives {
            flat.extend_from_slice(n);
        }
        flat.extend_from_slice(&g.nbis);
        (g.loss, flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docid::tokenize;
    use crate::gendec::params::ModelDims;

    #[test]
    fn cross_entropy_values() {
        let uniform = [0.0; 12];
        assert!((cross_entropy(&uniform, 3, None) - libm::log(12.0)).abs() < 1e-12);
        let mut sat = [0.0; 12];
        sat[5] = 1000.0;
        assert!(cross_entropy(&sat, 5, None) < 1e-12);
        assert!((cross_entropy(&[1.0, 2.0, 3.0], 2, None) - 0.407_605_964_444_380_1).abs() < 1e-12);
        let w = [2.0; 3];
        assert!((cross_entropy(&[1.0, 2.0, 3.0], 2, Some(&w)) - 2.0 * 0.407_605_964_444_380_1).abs() < 1e-12);
    }

    #[test]
    fn zero_params_lm_is_ln12() {
        let p = DecoderParams::zeros(ModelDims::new(4, 3));
        let t = tokenize("042").unwrap();
        let l = lm_loss(&p, &[0.1, 0.2, 0.3, 0.4], &t).unwrap();
        assert!((l - libm::log(12.0)).abs() < 1e-12);
    }

    #[test]
    fn identical_branches_add_margins() {
        let p = DecoderParams::init(ModelDims::new(4, 3), 5);
        let t = tokenize("042").unwrap();
        let d = [0.1, -0.2, 0.3, 0.4];
        let lm = lm_loss(&p, &d, &t).unwrap();
        let tri = triplet_lm_loss(&p, &d, &d, &d, &t, 0.5).unwrap();
        assert!((tri - (lm + 0.5)).abs() < 1e-12);
        let quad = quadruplet_lm_loss(&p, &d, &d, &d, &d, &t, 0.5, 0.3).unwrap();
        assert!((quad - (lm + 0.8)).abs() < 1e-12);
    }

    #[test]
    fn descriptor_degenerate_cases() {
        let z = [0.5, -0.5, 1.0];
        let negs: [&[f64]; 3] = [&z, &z, &z];
        let l = descriptor_quadruplet_loss(&z, &z, &negs, &z, 0.5, 0.3);
        assert!((l - 3.0 * 0.8).abs() < 1e-12);

        let far = [10.0, 0.0, 0.0];
        let nbis = [-10.0, 0.0, 0.0];
        let negs: [&[f64]; 1] = [&far];
        assert_eq!(descriptor_quadruplet_loss(&[0.0; 3], &[0.0; 3], &negs, &nbis, 0.5, 0.3), 0.0);
    }

    struct Constant;
    impl Differentiable for Constant {
        fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
            (3.5, vec![0.0; x.len()])
        }
    }

    struct Quadratic(Vec<f64>);
    impl Differentiable for Quadratic {
        fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
            let v = math::squared_distance(x, &self.0);
            (v, x.iter().zip(&self.0).map(|(a, c)| 2.0 * (a - c)).collect())
        }
    }

    #[test]
    fn generic_grad() {
        assert_eq!(grad(&[1.0, 2.0], &Constant).1, vec![0.0, 0.0]);
        let (v, g) = grad(&[1.0, 2.0], &Quadratic(vec![0.5, 3.0]));
        assert!((v - 1.25).abs() < 1e-15);
        assert_eq!(g, vec![1.0, -2.0]);
    }
}
