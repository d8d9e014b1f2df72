//! Crate-wide error type.

use alloc::string::String;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by construction, alignment, fitting and simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dt must be positive and finite, got {0}")]
    NonPositiveDt(f64),
    #[error("series must contain at least one value")]
    EmptySeries,
    #[error("slice {start}..{end} out of bounds for series of length {len}")]
    SliceOutOfBounds { start: usize, end: usize, len: usize },
    #[error("channel {name:?} has {got} values, expected {expected} on the shared grid")]
    ChannelLengthMismatch { name: String, got: usize, expected: usize },
    #[error("channel {0:?} is not on the dataset grid")]
    ChannelGridMismatch(String),
    #[error("segments must be disjoint, sorted, in bounds, and at least 2 samples long")]
    InvalidSegments,
    #[error("need at least 2 glucose records to align, got {0}")]
    TooFewGlucoseRecords(usize),
    #[error("no segment of at least 2 samples survives gap splitting")]
    AllSegmentsTooShort,
    #[error("invalid derivative spec: {0}")]
    InvalidDerivativeSpec(String),
    #[error("series of length {len} is too short for the {scheme} scheme (needs {min})")]
    SeriesTooShort { len: usize, min: usize, scheme: &'static str },
    #[error("invalid library spec: {0}")]
    InvalidLibrarySpec(String),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("segment {start}..{end} out of bounds for dataset of length {len}")]
    SegmentOutOfBounds { start: usize, end: usize, len: usize },
    #[error("invalid action profile: time constants must be positive and finite")]
    InvalidActionProfile,
    #[error("impulse response is undefined for negative time {0}")]
    NegativeTime(f64),
    #[error("dose values must be non-negative and finite, found {value} at index {index}")]
    NegativeDose { index: usize, value: f64 },
    #[error("invalid sparse regression config: {0}")]
    InvalidStlsqConfig(String),
    #[error("feature matrix has {theta_rows} rows but derivatives have {dxdt_rows}")]
    RowCountMismatch { theta_rows: usize, dxdt_rows: usize },
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
    #[error("initial state must be finite")]
    NonFiniteInitialState,
    #[error("control channel {name:?} covers {len} samples, horizon needs {needed}")]
    ControlCoverage { name: String, len: usize, needed: usize },
    #[error("invalid evaluation config: {0}")]
    InvalidEvalConfig(String),
    #[error("series lengths differ: {0} vs {1}")]
    MetricLengthMismatch(usize, usize),
    #[error("series grids differ")]
    MetricGridMismatch,
    #[error("value must be finite, got {0}")]
    NonFiniteValue(f64),
    #[error("no origin admits a full evaluation window")]
    NoValidOrigins,
    #[error("invalid synthetic patient config: {0}")]
    InvalidSynthConfig(String),
    #[error("schedule event at {0} min lies outside the configured duration")]
    ScheduleOutOfRange(f64),
    #[error("generated glucose left the sane range (20, 600) mg/dL: {value} at index {index}")]
    SynthGlucoseOutOfRange { index: usize, value: f64 },
    #[error("no segment is long enough to fit on")]
    NoUsableSegments,
}
