use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no training tuples satisfy the radius constraints")]
    NoTuples,

    #[error("coordinate {value}{} does not fit in {limit}", scene.map(|s| alloc::format!(" of scene {s}")).unwrap_or_default())]
    CoordinateOverflow {
        scene: Option<usize>,
        value: i64,
        limit: String,
    },

    #[error("value {value} out of range for hilbert order {order}")]
    OutOfRange { value: u64, order: u32 },

    #[error("malformed docid: {0}")]
    DocidFormat(String),

    #[error("duplicate docid {docid:?} for scenes {first} and {second}")]
    DuplicateDocid {
        docid: String,
        first: usize,
        second: usize,
    },

    #[error("prefix of length {len} exceeds decoder context {max}")]
    PrefixTooLong { len: usize, max: usize },

    #[error("training split is empty")]
    EmptyTrainSplit,

    #[error("timing fit needs at least {needed} sizes, got {got}")]
    TooFewSizes { needed: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
