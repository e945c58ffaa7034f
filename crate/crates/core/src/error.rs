//! Crate-wide error type.

use crate::window::Window;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown source kind in descriptor `{0}`")]
    UnknownSourceKind(String),
    #[error("malformed source descriptor `{descriptor}`: {reason}")]
    BadDescriptor { descriptor: String, reason: String },
    #[error("substitution is not primitive: letter `{0}` never reaches `{1}`")]
    NonPrimitiveSubstitution(char, char),
    #[error("seed pair `{left}|{right}` is not extendable under the substitution")]
    SeedNotExtendable { left: char, right: char },
    #[error("periodic word must be nonempty")]
    EmptyPeriodicWord,
    #[error("bernoulli parameter p={0} outside (0, 1)")]
    BadBernoulliParameter(f64),
    #[error("explicit source covers {available} but {requested} was requested")]
    ExplicitCoverage { available: Window, requested: Window },
    #[error("malformed observable descriptor `{descriptor}`: {reason}")]
    BadObservable { descriptor: String, reason: String },
    #[error("signal over {signal} does not cover requested window {requested}")]
    WindowCoverage { signal: Window, requested: Window },
    #[error("window bounds {lo}..{hi} are empty")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("scale index {index} out of range for schedule of {len} scales")]
    ScaleIndexOutOfRange { index: usize, len: usize },
    #[error("schedule scales must be strictly increasing")]
    NonIncreasingScales,
    #[error("derived window at scale index {index} is empty (shift {shift} exceeds the scale)")]
    EmptyDerivedWindow { index: usize, shift: i64 },
    #[error("grid size {grid} is smaller than the largest window ({window})")]
    GridTooSmall { grid: usize, window: usize },
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("frequency band [{lo}, {hi}] is within {margin} of known eigenfrequency {theta}")]
    MarginViolation { lo: f64, hi: f64, theta: f64, margin: f64 },
    #[error("requested {requested} terms but only {available} candidates are available")]
    TermCountExceedsCandidates { requested: usize, available: usize },
    #[error("symbol `{0}` has no weight assigned")]
    UnmappedSymbol(char),
    #[error("max lag {lag} exceeds a quarter of the window size {size}")]
    LagTooLarge { lag: i64, size: i64 },
    #[error("spectrum report was computed for `{expected}` but `{got}` was supplied")]
    ReportMismatch { expected: String, got: String },
    #[error("core must contain the constant observable")]
    MissingConstantObservable,
    #[error("offset list must contain 0")]
    MissingZeroOffset,
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
