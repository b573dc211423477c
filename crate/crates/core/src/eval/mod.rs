//! Place-recognition metrics and timing fits.

mod fit;
mod metrics;

pub use fit::{constant_fit, crossover, linear_fit, LinearFit, MethodTiming, SizeTiming, TimingReport};
pub use metrics::{
    confusion_at_threshold, f1_max, f1_score, ground_truth_build, hits_at_n, temporal_exclusion, Confusion,
    EvalReport, F1Max, GroundTruth, Protocol, RetrievalRecord, ScoreKind,
};
