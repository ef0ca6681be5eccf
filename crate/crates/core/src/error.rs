use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate curve")]
    DegenerateCurve,
    #[error("stationary segment")]
    StationarySegment,
    #[error("curve kind mismatch")]
    CurveKindMismatch,
    #[error("invalid curve: {0}")]
    InvalidCurve(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("frame below minimum size ({width}x{height}, need {min}x{min})")]
    FrameTooSmall { width: usize, height: usize, min: usize },
    #[error("frame size mismatch")]
    FrameSizeMismatch,
    #[error("sequence length mismatch")]
    SequenceLengthMismatch,
    #[error("too many superpixels")]
    TooManySuperpixels,

    #[error("incomplete trajectory")]
    IncompleteTrajectory,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("expected {expected} scales, got {got}")]
    ScaleCount { expected: usize, got: usize },

    #[error("insufficient training data")]
    InsufficientData,
    #[error("degenerate fit")]
    DegenerateFit,
    #[error("zero variance input: correlation undefined")]
    ZeroVariance,
    #[error("no discriminable pairs")]
    NoDiscriminablePairs,
    #[error("empty group")]
    EmptyGroup,

    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("inconsistent frame sizes")]
    InconsistentFrames,
    #[error("too few frames ({0}, need at least {1})")]
    TooFewFrames(usize, usize),
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error("config error on line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("unknown fixture kind: {0}")]
    UnknownFixture(String),
    #[error("missing input: {}", .0.display())]
    MissingPath(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
