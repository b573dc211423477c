//! The six subcommands. Each reads the files written by the previous stage
//! from the run's output directory and writes its own.

use std::collections::BTreeSet;
use std::path::PathBuf;

use dsi3d_core::dataset::{merge_shift, synth_dataset, Scene, SequenceDataset, SynthConfig};
use dsi3d_core::descindex::{exact_search, lsh_build, lsh_search, DescriptorMatrix};
use dsi3d_core::docid::{encode_dataset, Docid, DocidTrie, Strategy};
use dsi3d_core::eval::{
    ground_truth_build, temporal_exclusion, EvalReport, RetrievalRecord, ScoreKind, TimingReport,
};
use dsi3d_core::gendec::{reference_trie, retrieve_queries, train, ModelDims};
use dsi3d_core::seed::sub_seed;
use dsi3d_core::dataset::Split;
use serde::{Deserialize, Serialize};

use crate::bench::{timing_bench, BenchOptions, SyntheticWorkload};
use crate::config::{DatasetSource, Method, RunConfig};
use crate::error::{Error, Result};
use crate::formats::checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta};
use crate::formats::descriptors::{read_descriptors, write_descriptors};
use crate::formats::docids::{meta_path, read_docids, write_docids, write_meta};
use crate::formats::lsh::{read_lsh, write_lsh};
use crate::formats::poses::{load_poses, write_xyzt, PoseFormat};
use crate::formats::reports::{read_records, write_eval_csv, write_records, write_timing_csv, write_train_log};
use crate::formats::split::{read_split, write_split};
use crate::formats::{read_json, write_json};

pub const DESCRIPTORS: &str = "descriptors.dsc";
pub const POSES: &str = "poses.csv";
pub const SPLIT: &str = "split.csv";
pub const DOCIDS: &str = "docids.csv";
pub const ENCODE_REPORT: &str = "encode_report.json";
pub const CHECKPOINT: &str = "checkpoint.gdc";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const LSH_INDEX: &str = "lsh.idx";
pub const TIMING: &str = "timing";

pub fn records_file(method: Method) -> String {
    format!("records_{}.jsonl", method.as_str())
}

pub fn eval_file(method: Method, ext: &str) -> String {
    format!("eval_{}.{ext}", method.as_str())
}

/// Builds the dataset described by the configuration: a seeded synthetic
/// drive, or pose/descriptor file pairs merged with per-sequence shifts.
pub fn build_dataset(cfg: &RunConfig) -> Result<SequenceDataset> {
    match &cfg.dataset {
        DatasetSource::Synthetic {
            n_scenes,
            loop_fraction,
            descriptor_dim,
            noise_sigma,
        } => Ok(synth_dataset(&SynthConfig {
            n_scenes: *n_scenes,
            loop_fraction: *loop_fraction,
            descriptor_dim: *descriptor_dim,
            noise_sigma: *noise_sigma,
            seed: sub_seed(cfg.seed, "dataset"),
        })?),
        DatasetSource::Files { sequences } => {
            let mut parts = Vec::with_capacity(sequences.len());
            for (i, seq) in sequences.iter().enumerate() {
                let poses = load_poses(&seq.poses, seq.format)?;
                let (dim, rows) = read_descriptors(&seq.descriptors)?;
                let id = u32::try_from(i).map_err(|_| Error::Config("too many sequences".into()))?;
                let part = SequenceDataset::from_sequence(id, dim, poses, rows).map_err(|e| {
                    Error::format(&seq.descriptors, format!("does not match {}: {e}", seq.poses.display()))
                })?;
                parts.push(part);
            }
            Ok(merge_shift(parts)?)
        }
    }
}

/// Writes the descriptor matrix, pose CSV and split manifest.
pub fn prepare(cfg: &RunConfig) -> Result<SequenceDataset> {
    let ds = build_dataset(cfg)?;
    let rows: Vec<Vec<f64>> = ds.scenes.iter().map(|s| s.descriptor.clone()).collect();
    write_descriptors(&cfg.path(DESCRIPTORS), ds.descriptor_dim, &rows)?;
    let poses: Vec<_> = ds.scenes.iter().map(|s| s.pose).collect();
    write_xyzt(&cfg.path(POSES), &poses)?;
    write_split(&cfg.path(SPLIT), &ds)?;
    Ok(ds)
}

/// Reads back the dataset written by [`prepare`]. Descriptors come back
/// rounded to f32, so every later stage sees exactly the stored values.
pub fn load_dataset(cfg: &RunConfig) -> Result<SequenceDataset> {
    let (dsc, poses_path, split_path) = (cfg.path(DESCRIPTORS), cfg.path(POSES), cfg.path(SPLIT));
    let (dim, rows) = read_descriptors(&dsc)?;
    let poses = load_poses(&poses_path, PoseFormat::XyztCsv)?;
    let split = read_split(&split_path)?;
    if rows.len() != poses.len() || rows.len() != split.len() {
        return Err(Error::format(
            &split_path,
            format!("{} rows, but {} poses and {} descriptors", split.len(), poses.len(), rows.len()),
        ));
    }
    let scenes = split
        .iter()
        .zip(poses)
        .zip(rows)
        .map(|((row, pose), descriptor)| Scene {
            scene_index: row.scene_index,
            sequence_id: row.sequence_id,
            frame: row.frame,
            pose,
            descriptor,
        })
        .collect();
    let mut ds = SequenceDataset::new(dim, scenes)?;
    ds.split = split.iter().map(|r| r.split).collect();
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub strategy: Strategy,
    pub docids: usize,
    /// Longest docid in digits.
    pub docid_length: usize,
    pub collisions: usize,
    pub trie_nodes: usize,
}

/// Encodes every scene and writes the docid table, codec sidecar and report.
pub fn encode(cfg: &RunConfig) -> Result<EncodeReport> {
    let ds = load_dataset(cfg)?;
    let meta = cfg.docid.meta(sub_seed(cfg.seed, "kmeans")).fit(&ds);
    let encoded = encode_dataset(&ds, &meta)?;
    let trie = DocidTrie::build(&encoded.docids)?;
    let table = cfg.path(DOCIDS);
    write_docids(&table, &encoded.docids)?;
    write_meta(&meta_path(&table), &encoded.meta)?;
    let report = EncodeReport {
        strategy: meta.strategy,
        docids: encoded.docids.len(),
        docid_length: encoded.docids.iter().map(Docid::len).max().unwrap_or(0),
        collisions: encoded.collisions,
        trie_nodes: trie.stats().nodes,
    };
    write_json(&cfg.path(ENCODE_REPORT), &report)?;
    Ok(report)
}

fn load_docids(cfg: &RunConfig, ds: &SequenceDataset) -> Result<Vec<Docid>> {
    let path = cfg.path(DOCIDS);
    let docids = read_docids(&path)?;
    if docids.len() != ds.len() {
        return Err(Error::format(&path, format!("{} docids for {} scenes", docids.len(), ds.len())));
    }
    Ok(docids)
}

/// Trains the decoder and writes the best-validation checkpoint and the
/// per-epoch log.
pub fn train_cmd(cfg: &RunConfig) -> Result<CheckpointMeta> {
    let ds = load_dataset(cfg)?;
    let docids = load_docids(cfg, &ds)?;
    let train_cfg = cfg.train_config();
    let outcome = train(&ds, &docids, &train_cfg)?;
    let meta = CheckpointMeta {
        train: train_cfg,
        strategy: docids.first().map_or(cfg.docid.strategy, |d| d.strategy),
        best_epoch: outcome.best_epoch,
    };
    write_checkpoint(&cfg.path(CHECKPOINT), &outcome.params, &meta)?;
    write_train_log(&cfg.path(TRAIN_LOG), &outcome.log)?;
    Ok(meta)
}

/// Retrieves TRAIN references for every query-split scene and writes one
/// JSON record per query.
pub fn retrieve(cfg: &RunConfig) -> Result<PathBuf> {
    let ds = load_dataset(cfg)?;
    let r = &cfg.retrieval;
    let queries = ds.indices(r.query_split);
    let window = cfg.eval.revisit_window;
    let records = match r.method {
        Method::Generative => {
            let docids = load_docids(cfg, &ds)?;
            let (params, _) = read_checkpoint(&cfg.path(CHECKPOINT))?;
            let trie = reference_trie(&ds, &docids)?;
            retrieve_queries(&params, &ds, &queries, &trie, r.beam_width, r.top_k, window)?
        }
        Method::Exact => {
            let refs = DescriptorMatrix::from_split(&ds, Split::Train);
            queries
                .iter()
                .map(|&q| {
                    let hits = exact_search(&ds.scenes[q].descriptor, &refs, r.top_k, temporal_exclusion(&ds, q, window))?;
                    Ok(RetrievalRecord {
                        query_index: q,
                        candidates: hits,
                        score_kind: ScoreKind::Cosine,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Method::Lsh => {
            let refs = DescriptorMatrix::from_split(&ds, Split::Train);
            let path = cfg.path(LSH_INDEX);
            let index = lsh_build(&refs, r.lsh_bits, sub_seed(cfg.seed, "lsh"))?;
            write_lsh(&path, &index)?;
            let index = read_lsh(&path, refs.ids().to_vec())?;
            queries
                .iter()
                .map(|&q| {
                    let hits = lsh_search(&ds.scenes[q].descriptor, &index, r.top_k, temporal_exclusion(&ds, q, window))?;
                    Ok(RetrievalRecord {
                        query_index: q,
                        candidates: hits.into_iter().map(|(id, d)| (id, -f64::from(d))).collect(),
                        score_kind: ScoreKind::NegHamming,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let out = cfg.path(&records_file(r.method));
    write_records(&out, &records)?;
    Ok(out)
}

/// Scores the records of the configured method and writes JSON and CSV
/// reports. Records must cover exactly the query split.
pub fn eval(cfg: &RunConfig) -> Result<EvalReport> {
    let ds = load_dataset(cfg)?;
    let method = cfg.retrieval.method;
    let path = cfg.path(&records_file(method));
    let records = read_records(&path)?;
    let expected: BTreeSet<usize> = ds.indices(cfg.retrieval.query_split).into_iter().collect();
    let got: BTreeSet<usize> = records.iter().map(|r| r.query_index).collect();
    if got.len() != records.len() || got != expected {
        return Err(Error::format(
            &path,
            format!(
                "records cover {} distinct queries of {}, but the {} split has {} scenes",
                got.len(),
                records.len(),
                cfg.retrieval.query_split.as_str(),
                expected.len()
            ),
        ));
    }
    if let Some(bad) = records.iter().flat_map(|r| &r.candidates).find(|(c, _)| *c >= ds.len()) {
        return Err(Error::format(&path, format!("candidate scene {} does not exist", bad.0)));
    }
    let gt = ground_truth_build(&ds, cfg.retrieval.query_split, cfg.eval.pos_radius, cfg.eval.revisit_window);
    let report = EvalReport::build(method.as_str(), records, &ds, &gt, &cfg.eval);
    write_json(&cfg.path(&eval_file(method, "json")), &report)?;
    write_eval_csv(&cfg.path(&eval_file(method, "csv")), std::slice::from_ref(&report))?;
    Ok(report)
}

/// Times exact, LSH and generative retrieval on synthetic references of
/// each configured size and writes the timing report.
pub fn bench(cfg: &RunConfig) -> Result<TimingReport> {
    let b = &cfg.bench;
    let max = b.sizes.iter().copied().max().unwrap_or(0);
    let dims = ModelDims {
        embed: cfg.train.embed_dim,
        hidden: cfg.train.hidden_dim,
        ..ModelDims::new(b.descriptor_dim, 1)
    };
    let workload = SyntheticWorkload::new(max, b.queries, b.descriptor_dim, b.docid_scale, dims, sub_seed(cfg.seed, "bench"))?;
    let opts = BenchOptions {
        repeats: b.repeats,
        warmup: b.warmup,
        queries: b.queries,
    };
    let lsh_seed = sub_seed(cfg.seed, "lsh");
    let report = timing_bench(&b.sizes, &opts, |n| {
        workload.methods(n, cfg.retrieval.beam_width, b.lsh_bits, lsh_seed)
    })?;
    write_json(&cfg.path(&format!("{TIMING}.json")), &report)?;
    write_timing_csv(&cfg.path(&format!("{TIMING}.csv")), &report)?;
    Ok(report)
}

/// Reads a JSON report written by one of the subcommands.
pub fn read_report<T: serde::de::DeserializeOwned>(cfg: &RunConfig, name: &str) -> Result<T> {
    read_json(&cfg.path(name))
}
