//! Pose-stamped descriptor sequences: construction, synthesis, merging,
//! split assignment, training-tuple mining and revisit ground truth.
//!
//! All radius rules use the planar (x, y) distance; `z` is carried along but
//! never enters a distance.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::PlanarGrid;
use crate::math;
use crate::seed;
use crate::{Error, Result};

/// Radius within which two scenes show the same place.
pub const POSITIVE_RADIUS: f64 = 3.0;
/// Radius beyond which two scenes are different places.
pub const NEGATIVE_RADIUS: f64 = 20.0;
/// Scenes closer in time than this are the same pass, not a revisit.
pub const REVISIT_WINDOW: f64 = 30.0;
/// Timestamp spacing used when a pose source carries no clock (10 Hz).
pub const FRAME_PERIOD: f64 = 0.1;
/// Descriptor dimension used when none is given.
pub const DEFAULT_DESCRIPTOR_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Seconds.
    pub t: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64, t: f64) -> Self {
        Pose { x, y, z, t }
    }

    pub fn planar_distance(&self, other: &Pose) -> f64 {
        math::planar_distance(self.x, self.y, other.x, other.y)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.t.is_finite() && self.t >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Split {
    Train,
    Val,
    Eval,
}

impl Split {
    /// Split of the scene at position `frame` of its own sequence: indices not
    /// divisible by five train, multiples of ten evaluate, the rest validate.
    pub fn for_frame(frame: usize) -> Split {
        if !frame.is_multiple_of(5) {
            Split::Train
        } else if frame.is_multiple_of(10) {
            Split::Eval
        } else {
            Split::Val
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "TRAIN",
            Split::Val => "VAL",
            Split::Eval => "EVAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Position in the (possibly merged) dataset.
    pub scene_index: usize,
    pub sequence_id: u32,
    /// Position within the scene's own sequence; drives the split rule.
    pub frame: usize,
    pub pose: Pose,
    pub descriptor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub scenes: Vec<Scene>,
    pub descriptor_dim: usize,
    /// `split[i]` is the split of `scenes[i]`.
    pub split: Vec<Split>,
}

impl SequenceDataset {
    /// Validates `scenes` and assigns the frame-based split.
    pub fn new(descriptor_dim: usize, scenes: Vec<Scene>) -> Result<Self> {
        for (i, s) in scenes.iter().enumerate() {
            if s.scene_index != i {
                return Err(Error::InvalidArgument(format!(
                    "scene indices must be contiguous from 0; position {i} holds {}",
                    s.scene_index
                )));
            }
            if s.descriptor.len() != descriptor_dim {
                return Err(Error::DimensionMismatch {
                    expected: descriptor_dim,
                    found: s.descriptor.len(),
                });
            }
            if !s.pose.is_valid() {
                return Err(Error::InvalidArgument(format!("scene {i} has an invalid pose")));
            }
            if s.descriptor.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("scene {i} has a non-finite descriptor")));
            }
        }
        let split = scenes.iter().map(|s| Split::for_frame(s.frame)).collect();
        Ok(SequenceDataset {
            scenes,
            descriptor_dim,
            split,
        })
    }

    /// One sequence from aligned poses and descriptors.
    pub fn from_sequence(
        sequence_id: u32,
        descriptor_dim: usize,
        poses: Vec<Pose>,
        descriptors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if poses.len() != descriptors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} poses but {} descriptors",
                poses.len(),
                descriptors.len()
            )));
        }
        let scenes = poses
            .into_iter()
            .zip(descriptors)
            .enumerate()
            .map(|(i, (pose, descriptor))| Scene {
                scene_index: i,
                sequence_id,
                frame: i,
                pose,
                descriptor,
            })
            .collect();
        SequenceDataset::new(descriptor_dim, scenes)
    }

    pub fn empty(descriptor_dim: usize) -> Self {
        SequenceDataset {
            scenes: Vec::new(),
            descriptor_dim,
            split: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    /// Scene indices in `split`, ascending.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.scenes.iter().map(|s| (s.pose.x, s.pose.y)).collect()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.scenes[a].pose.planar_distance(&self.scenes[b].pose)
    }
}

/// Recomputes the split of every scene from its within-sequence frame.
pub fn assign_split(mut dataset: SequenceDataset) -> SequenceDataset {
    dataset.split = dataset.scenes.iter().map(|s| Split::for_frame(s.frame)).collect();
    dataset
}

/// Seeded smooth map from a planar location to a unit descriptor.
///
/// Every dimension is a sum of eight planar cosine waves with random heading,
/// phase and a wavelength in 20–200 m, so nearby locations get nearly
/// parallel descriptors and distant ones decorrelate.
#[derive(Debug, Clone)]
pub struct DescriptorField {
    dim: usize,
    // per (dimension, wave): (kx, ky, phase)
    waves: Vec<(f64, f64, f64)>,
}

impl DescriptorField {
    pub const WAVES: usize = 8;
    pub const MIN_WAVELENGTH: f64 = 20.0;
    pub const MAX_WAVELENGTH: f64 = 200.0;

    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = seed::named_rng(seed, "descriptor-field");
        let mut waves = Vec::with_capacity(dim * Self::WAVES);
        for _ in 0..dim * Self::WAVES {
            let heading = rng.random_range(0.0..2.0 * PI);
            let wavelength = rng.random_range(Self::MIN_WAVELENGTH..Self::MAX_WAVELENGTH);
            let phase = rng.random_range(0.0..2.0 * PI);
            let k = 2.0 * PI / wavelength;
            waves.push((k * libm::cos(heading), k * libm::sin(heading), phase));
        }
        DescriptorField { dim, waves }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Unit-normalized field value at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .waves
            .chunks_exact(Self::WAVES)
            .map(|ws| ws.iter().map(|&(kx, ky, ph)| libm::cos(kx * x + ky * y + ph)).sum())
            .collect();
        math::normalize(&mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_scenes: usize,
    /// Fraction of the trajectory (a suffix) that re-drives earlier ground.
    pub loop_fraction: f64,
    pub descriptor_dim: usize,
    /// Standard deviation of the per-component Gaussian descriptor noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_scenes: 500,
            loop_fraction: 0.2,
            descriptor_dim: DEFAULT_DESCRIPTOR_DIM,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

/// Maximum lateral offset of a revisit from the original pass.
const REVISIT_OFFSET: f64 = 1.0;
/// Standard deviation of the per-step heading change of the synthetic walk.
const HEADING_JITTER: f64 = 0.08;

/// Simulated single-sequence drive.
///
/// The first `n_scenes - round(loop_fraction * n_scenes)` scenes follow a
/// smooth random walk with 1 m steps at 10 Hz; the remaining suffix re-drives
/// the walk from its start, each scene less than 1 m from the original.
/// Descriptors are `normalize(field(x, y) + noise)`.
pub fn synth_dataset(config: &SynthConfig) -> Result<SequenceDataset> {
    let SynthConfig {
        n_scenes,
        loop_fraction,
        descriptor_dim,
        noise_sigma,
        seed,
    } = *config;
    if !(0.0..=1.0).contains(&loop_fraction) {
        return Err(Error::InvalidArgument(format!("loop_fraction {loop_fraction} outside [0, 1]")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise_sigma {noise_sigma} must be non-negative")));
    }
    if descriptor_dim == 0 {
        return Err(Error::InvalidArgument("descriptor_dim must be positive".into()));
    }
    if n_scenes == 0 {
        return Ok(SequenceDataset::empty(descriptor_dim));
    }

    let n_loop = libm::round(loop_fraction * n_scenes as f64) as usize;
    let n_loop = n_loop.min(n_scenes - 1);
    let n_first = n_scenes - n_loop;

    let mut walk = seed::named_rng(seed, "trajectory");
    let jitter = Normal::new(0.0, HEADING_JITTER).expect("finite sigma");
    let mut positions = Vec::with_capacity(n_scenes);
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut heading = walk.random_range(0.0..2.0 * PI);
    for _ in 0..n_first {
        positions.push((x, y));
        heading += jitter.sample(&mut walk);
        x += libm::cos(heading);
        y += libm::sin(heading);
    }
    for j in 0..n_loop {
        let (ox, oy) = positions[j % n_first];
        let r = REVISIT_OFFSET * libm::sqrt(walk.random_range(0.0..1.0));
        let a = walk.random_range(0.0..2.0 * PI);
        positions.push((ox + r * libm::cos(a), oy + r * libm::sin(a)));
    }

    let field = DescriptorField::new(descriptor_dim, seed);
    let mut noise_rng = seed::named_rng(seed, "descriptor-noise");
    let noise = Normal::new(0.0, noise_sigma).expect("validated sigma");
    let scenes = positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let mut descriptor = field.eval(x, y);
            if noise_sigma > 0.0 {
                for v in descriptor.iter_mut() {
                    *v += noise.sample(&mut noise_rng);
                }
                math::normalize(&mut descriptor);
            }
            Scene {
                scene_index: i,
                sequence_id: 0,
                frame: i,
                pose: Pose::new(x, y, 0.0, i as f64 * FRAME_PERIOD),
                descriptor,
            }
        })
        .collect();
    SequenceDataset::new(descriptor_dim, scenes)
}

/// Offset applied to sequence `position` when merging.
pub const MERGE_SHIFT: f64 = 1000.0;

/// Concatenates sequences, shifting the `i`-th (0-based) by `(i * 1000 m,
/// i * 1000 m)` in x and y so they cannot overlap. Scene indices are
/// renumbered; sequence ids and frames are kept.
pub fn merge_shift(sequences: Vec<SequenceDataset>) -> Result<SequenceDataset> {
    let Some(dim) = sequences.first().map(|s| s.descriptor_dim) else {
        return Ok(SequenceDataset::empty(DEFAULT_DESCRIPTOR_DIM));
    };
    if let Some(bad) = sequences.iter().find(|s| s.descriptor_dim != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.descriptor_dim,
        });
    }
    let total = sequences.iter().map(SequenceDataset::len).sum();
    let mut scenes = Vec::with_capacity(total);
    for (i, seq) in sequences.into_iter().enumerate() {
        let shift = i as f64 * MERGE_SHIFT;
        for mut scene in seq.scenes {
            scene.scene_index = scenes.len();
            scene.pose.x += shift;
            scene.pose.y += shift;
            scenes.push(scene);
        }
    }
    SequenceDataset::new(dim, scenes)
}

/// Query, positive, negative and second negative scene indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTuple {
    pub q: usize,
    pub p: usize,
    pub n: usize,
    pub nbis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub p_radius: f64,
    pub n_radius: f64,
    pub negatives_per_query: usize,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            p_radius: POSITIVE_RADIUS,
            n_radius: NEGATIVE_RADIUS,
            negatives_per_query: 1,
            seed: 0,
        }
    }
}

const REJECTION_TRIES: usize = 64;

/// Samples training tuples from the TRAIN scenes.
///
/// Every TRAIN scene with at least one positive is a query; each query yields
/// `negatives_per_query` tuples with the positive, negative and second
/// negative drawn uniformly from their eligible sets.
pub fn mine_tuples(dataset: &SequenceDataset, config: &MiningConfig) -> Result<Vec<TrainTuple>> {
    let MiningConfig {
        p_radius,
        n_radius,
        negatives_per_query,
        seed,
    } = *config;
    if !(p_radius >= 0.0 && n_radius > p_radius) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= p_radius < n_radius, got {p_radius} and {n_radius}"
        )));
    }
    let train = dataset.indices(Split::Train);
    if train.len() < 4 {
        return Err(Error::NoTuples);
    }
    let positions = dataset.positions();
    let grid = PlanarGrid::new(&positions, train.iter().copied(), n_radius.max(1.0));
    let dist = |a: usize, b: usize| {
        let (ax, ay) = positions[a];
        let (bx, by) = positions[b];
        math::planar_distance(ax, ay, bx, by)
    };

    let mut rng = seed::named_rng(seed, "mine-tuples");
    let mut tuples = Vec::new();
    for &q in &train {
        let (qx, qy) = positions[q];
        let positives: Vec<usize> = grid.within(qx, qy, p_radius).into_iter().filter(|&s| s != q).collect();
        if positives.is_empty() {
            continue;
        }
        for _ in 0..negatives_per_query {
            let p = positives[rng.random_range(0..positives.len())];
            let Some(n) = sample_eligible(&train, &mut rng, |s| dist(q, s) >= n_radius) else {
                continue;
            };
            let Some(nbis) = sample_eligible(&train, &mut rng, |s| dist(q, s) >= n_radius && dist(n, s) >= n_radius)
            else {
                continue;
            };
            tuples.push(TrainTuple { q, p, n, nbis });
        }
    }
    if tuples.is_empty() {
        Err(Error::NoTuples)
    } else {
        Ok(tuples)
    }
}

/// Uniform draw from `pool` restricted to `eligible`: rejection sampling first,
/// then an exhaustive filter when eligible members are rare.
fn sample_eligible(pool: &[usize], rng: &mut seed::Rng, eligible: impl Fn(usize) -> bool) -> Option<usize> {
    for _ in 0..REJECTION_TRIES {
        let s = pool[rng.random_range(0..pool.len())];
        if eligible(s) {
            return Some(s);
        }
    }
    let all: Vec<usize> = pool.iter().copied().filter(|&s| eligible(s)).collect();
    if all.is_empty() {
        None
    } else {
        Some(all[rng.random_range(0..all.len())])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisitLabel {
    pub scene_index: usize,
    pub is_revisit: bool,
}

/// A scene is a revisit iff some scene within `radius` was observed more than
/// `dt` seconds earlier.
pub fn revisit_labels(dataset: &SequenceDataset, radius: f64, dt: f64) -> Vec<RevisitLabel> {
    let positions = dataset.positions();
    let grid = PlanarGrid::new(&positions, 0..positions.len(), radius.max(1.0));
    dataset
        .scenes
        .iter()
        .map(|q| {
            let is_revisit = grid
                .within(q.pose.x, q.pose.y, radius)
                .into_iter()
                .any(|s| q.pose.t - dataset.scenes[s].pose.t > dt);
            RevisitLabel {
                scene_index: q.scene_index,
                is_revisit,
            }
        })
        .collect()
}
