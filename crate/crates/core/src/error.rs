//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A sample or derived value was NaN or infinite.
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Observed sampling rate drifted too far from the configured rate.
    #[error("sampling rate mismatch: configured {expected_hz} Hz, observed {observed_hz:.3} Hz")]
    RateMismatch { expected_hz: f64, observed_hz: f64 },

    /// A configuration value violates its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Model parameters violate their documented ranges.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An operation that needs samples was handed an empty window.
    #[error("empty window")]
    EmptyWindow,

    /// The window has more samples than the fixed-length spectrum can hold.
    #[error("window of {len} samples exceeds the {max}-point transform")]
    WindowTooLong { len: usize, max: usize },

    /// Crossover needs at least two distinct parents.
    #[error("population of {have} is too small for crossover (need at least 2)")]
    InsufficientParents { have: usize },

    /// No usable spectral peak inside the plausible compression band.
    #[error("no spectral peak found in the compression band")]
    NoPeak,

    /// An error report was requested for an empty set of aligned events.
    #[error("no aligned events with reference values to report on")]
    EmptyReport,

    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
