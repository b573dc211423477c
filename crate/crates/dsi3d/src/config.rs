//! Run configuration: one JSON document drives every subcommand.
//!
//! Every section has defaults, so `{}` is a valid configuration (a 500-scene
//! synthetic run with HILBERT docids). Keys can be overridden from the
//! command line with dotted paths, e.g. `train.epochs=5`.

use std::path::{Path, PathBuf};

use dsi3d_core::dataset::{Split, SynthConfig, DEFAULT_DESCRIPTOR_DIM};
use dsi3d_core::docid::{hilbert, CodecMeta, Strategy};
use dsi3d_core::eval::Protocol;
use dsi3d_core::gendec::{TrainConfig, DEFAULT_BEAM_WIDTH};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::formats::poses::PoseFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; every seeded component derives its stream from it.
    pub seed: u64,
    /// Output directory shared by all subcommands.
    pub out: PathBuf,
    pub dataset: DatasetSource,
    pub docid: DocidSettings,
    pub train: TrainConfig,
    pub retrieval: RetrievalSettings,
    pub eval: Protocol,
    pub bench: BenchSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("run"),
            dataset: DatasetSource::default(),
            docid: DocidSettings::default(),
            train: TrainConfig::default(),
            retrieval: RetrievalSettings::default(),
            eval: Protocol::default(),
            bench: BenchSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic {
        #[serde(default = "defaults::n_scenes")]
        n_scenes: usize,
        #[serde(default = "defaults::loop_fraction")]
        loop_fraction: f64,
        #[serde(default = "defaults::descriptor_dim")]
        descriptor_dim: usize,
        #[serde(default = "defaults::noise_sigma")]
        noise_sigma: f64,
    },
    /// Pose and descriptor files, one pair per sequence, merged in order.
    Files { sequences: Vec<SequenceFiles> },
}

impl Default for DatasetSource {
    fn default() -> Self {
        let s = SynthConfig::default();
        DatasetSource::Synthetic {
            n_scenes: s.n_scenes,
            loop_fraction: s.loop_fraction,
            descriptor_dim: s.descriptor_dim,
            noise_sigma: s.noise_sigma,
        }
    }
}

mod defaults {
    use super::*;

    pub fn n_scenes() -> usize {
        SynthConfig::default().n_scenes
    }
    pub fn loop_fraction() -> f64 {
        SynthConfig::default().loop_fraction
    }
    pub fn descriptor_dim() -> usize {
        DEFAULT_DESCRIPTOR_DIM
    }
    pub fn noise_sigma() -> f64 {
        SynthConfig::default().noise_sigma
    }
    pub fn pose_format() -> PoseFormat {
        PoseFormat::KittiOdometry3x4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFiles {
    pub poses: PathBuf,
    #[serde(default = "defaults::pose_format")]
    pub format: PoseFormat,
    /// `DSC1` file aligned with the pose lines.
    pub descriptors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocidSettings {
    pub strategy: Strategy,
    /// Integer units per meter for GPS and HILBERT.
    pub scale: f64,
    pub hilbert_order: u32,
    pub kmeans_k: usize,
    pub leaf_size: usize,
}

impl Default for DocidSettings {
    fn default() -> Self {
        DocidSettings {
            strategy: Strategy::Hilbert,
            scale: CodecMeta::DEFAULT_SCALE,
            hilbert_order: hilbert::DEFAULT_ORDER,
            kmeans_k: CodecMeta::DEFAULT_K,
            leaf_size: CodecMeta::DEFAULT_LEAF_SIZE,
        }
    }
}

impl DocidSettings {
    pub fn meta(&self, seed: u64) -> CodecMeta {
        CodecMeta {
            scale: self.scale,
            hilbert_order: self.hilbert_order,
            kmeans_k: self.kmeans_k,
            kmeans_seed: seed,
            leaf_size: self.leaf_size,
            ..CodecMeta::new(self.strategy)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Generative,
    Exact,
    Lsh,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Generative => "generative",
            Method::Exact => "exact",
            Method::Lsh => "lsh",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    pub method: Method,
    pub beam_width: usize,
    pub top_k: usize,
    pub lsh_bits: usize,
    /// Scenes used as queries; references are always the TRAIN split.
    pub query_split: Split,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        RetrievalSettings {
            method: Method::Generative,
            beam_width: DEFAULT_BEAM_WIDTH,
            top_k: DEFAULT_BEAM_WIDTH,
            lsh_bits: 256,
            query_split: Split::Eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    /// Reference sizes, ascending.
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub warmup: usize,
    /// Queries timed per repeat; reported times are per query.
    pub queries: usize,
    pub descriptor_dim: usize,
    /// HILBERT scale for the benchmark references, coarse enough that the
    /// largest synthetic trajectory fits the curve.
    pub docid_scale: f64,
    pub lsh_bits: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            sizes: vec![1_000, 5_000, 20_000, 50_000],
            repeats: 20,
            warmup: 3,
            queries: 10,
            descriptor_dim: DEFAULT_DESCRIPTOR_DIM,
            docid_scale: 10.0,
            lsh_bits: 256,
        }
    }
}

impl RunConfig {
    /// Parses a configuration, applying `key.path=value` overrides first.
    /// Values are read as JSON when possible and as plain strings otherwise.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !doc.is_object() {
            return Err(Error::Config("configuration must be a JSON object".into()));
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        // A dataset section without a source describes the synthetic drive.
        if let Some(ds) = doc.get_mut("dataset").and_then(Value::as_object_mut) {
            ds.entry("source").or_insert_with(|| Value::String("synthetic".into()));
        }
        serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => "{}".to_string(),
        };
        Self::from_json(&text, overrides)
    }

    /// Training configuration with the global seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            beam_width: self.retrieval.beam_width,
            p_radius: self.eval.pos_radius,
            revisit_window: self.eval.revisit_window,
            ..self.train
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn apply_override(doc: &mut Value, arg: &str) -> Result<()> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {arg:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
