//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("{path}: size {actual} bytes is not a positive multiple of the {frame_bytes}-byte frame size")]
    TruncatedFrame {
        path: PathBuf,
        actual: u64,
        frame_bytes: u64,
    },

    #[error("bad geometry: {0}")]
    BadGeometry(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },

    #[error("plane {width}x{height} is too small for a {needed}-pixel window")]
    PlaneTooSmall {
        width: usize,
        height: usize,
        needed: usize,
    },

    #[error("{path}: holds {actual} frames, manifest declares {expected}")]
    FrameCountMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate weights: normalization constant is not positive")]
    DegenerateWeights,

    #[error("feature matrix is rank deficient")]
    RankDeficient,

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("input lengths differ or are too short: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero variance in input series")]
    ZeroVariance,

    #[error("unknown distortion kind: {0}")]
    UnknownKind(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
