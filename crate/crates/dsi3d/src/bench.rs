//! Wall-clock timing of retrieval methods across reference sizes.

use std::time::Instant;

use dsi3d_core::dataset::{synth_dataset, SequenceDataset, SynthConfig};
use dsi3d_core::descindex::{exact_search, lsh_build, lsh_search, DescriptorMatrix};
use dsi3d_core::docid::{encode_dataset, CodecMeta, DocidTrie, Strategy};
use dsi3d_core::eval::{MethodTiming, SizeTiming, TimingReport};
use dsi3d_core::gendec::{beam_search, DecoderParams, ModelDims};

use crate::error::{Error, Result};

/// One retrieval method prepared for a given reference size. `run` answers
/// query number `i` (an index into the benchmark's query set).
pub struct TimedMethod<'a> {
    pub name: String,
    /// Expected to scale linearly with the reference size.
    pub scan: bool,
    pub run: Box<dyn FnMut(usize) + 'a>,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub repeats: usize,
    pub warmup: usize,
    pub queries: usize,
}

/// Times `run` over `queries` queries per repeat; returns per-query seconds
/// for each repeat.
pub fn time_repeats(run: &mut dyn FnMut(usize), opts: &BenchOptions) -> Vec<f64> {
    for w in 0..opts.warmup {
        run(w % opts.queries.max(1));
    }
    (0..opts.repeats)
        .map(|_| {
            let start = Instant::now();
            for q in 0..opts.queries {
                run(q);
            }
            start.elapsed().as_secs_f64() / opts.queries.max(1) as f64
        })
        .collect()
}

pub fn summarize(n_ref: usize, samples: &[f64]) -> SizeTiming {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    SizeTiming {
        n_ref,
        mean_seconds: mean,
        std_seconds: var.sqrt(),
        median_seconds: median,
    }
}

/// Runs every method returned by `setup(n)` for each size and fits the
/// results. `sizes` must be ascending with at least four entries.
pub fn timing_bench<'a, F>(sizes: &[usize], opts: &BenchOptions, mut setup: F) -> Result<TimingReport>
where
    F: FnMut(usize) -> Result<Vec<TimedMethod<'a>>>,
{
    if opts.repeats == 0 || opts.queries == 0 {
        return Err(Error::Config("bench needs at least one repeat and one query".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("bench sizes must be strictly ascending".into()));
    }
    let mut methods: Vec<MethodTiming> = Vec::new();
    for &n in sizes {
        for mut m in setup(n)? {
            let samples = time_repeats(&mut m.run, opts);
            let timing = summarize(n, &samples);
            match methods.iter_mut().find(|t| t.method == m.name) {
                Some(t) => t.sizes.push(timing),
                None => methods.push(MethodTiming {
                    method: m.name,
                    scan: m.scan,
                    sizes: vec![timing],
                    linear: None,
                    constant: None,
                }),
            }
        }
    }
    Ok(TimingReport::from_timings(methods)?)
}

/// Synthetic workload for the standard comparison: references are the first
/// `n` scenes of one long synthetic drive, queries the scenes after the
/// largest size.
pub struct SyntheticWorkload {
    pub dataset: SequenceDataset,
    pub queries: Vec<usize>,
    pub docids: Vec<String>,
    pub params: DecoderParams,
}

impl SyntheticWorkload {
    pub fn new(max_size: usize, queries: usize, dim: usize, docid_scale: f64, dims: ModelDims, seed: u64) -> Result<Self> {
        let dataset = synth_dataset(&SynthConfig {
            n_scenes: max_size + queries,
            loop_fraction: 0.0,
            descriptor_dim: dim,
            noise_sigma: SynthConfig::default().noise_sigma,
            seed,
        })?;
        let meta = CodecMeta {
            scale: docid_scale,
            ..CodecMeta::new(Strategy::Hilbert)
        }
        .fit(&dataset);
        let docids = encode_dataset(&dataset, &meta)?
            .docids
            .into_iter()
            .map(|d| d.as_str().to_string())
            .collect::<Vec<_>>();
        let longest = docids.iter().map(String::len).max().unwrap_or(1);
        let params = DecoderParams::init(
            ModelDims {
                descriptor: dim,
                max_len: longest + 2,
                ..dims
            },
            seed,
        );
        Ok(SyntheticWorkload {
            queries: (max_size..max_size + queries).collect(),
            dataset,
            docids,
            params,
        })
    }

    /// Exact, LSH and generative retrieval over the first `n` scenes.
    pub fn methods(&self, n: usize, beam_width: usize, lsh_bits: usize, seed: u64) -> Result<Vec<TimedMethod<'_>>> {
        let mut refs = DescriptorMatrix::with_capacity(self.dataset.descriptor_dim, n);
        for s in &self.dataset.scenes[..n] {
            refs.push(s.scene_index, &s.descriptor)?;
        }
        let lsh = lsh_build(&refs, lsh_bits, seed)?;
        let trie = DocidTrie::from_pairs(self.docids[..n].iter().enumerate().map(|(i, d)| (i, d.as_str())))?;
        let q = |i: usize| self.dataset.scenes[self.queries[i]].descriptor.as_slice();
        Ok(vec![
            TimedMethod {
                name: "exact".into(),
                scan: true,
                run: Box::new(move |i| {
                    std::hint::black_box(exact_search(q(i), &refs, 1, |_| false).expect("valid query"));
                }),
            },
            TimedMethod {
                name: "lsh".into(),
                scan: true,
                run: Box::new(move |i| {
                    std::hint::black_box(lsh_search(q(i), &lsh, 1, |_| false).expect("valid query"));
                }),
            },
            TimedMethod {
                name: "generative".into(),
                scan: false,
                run: Box::new(move |i| {
                    std::hint::black_box(
                        beam_search(&self.params, q(i), &trie, beam_width, 1).expect("valid query"),
                    );
                }),
            },
        ])
    }
}
