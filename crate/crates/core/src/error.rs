use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cutoff {cutoff_hz} Hz must lie strictly inside (0, Nyquist = {nyquist_hz} Hz)")]
    NyquistViolation { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("filter tap count must be odd, got {0}")]
    EvenTapCount(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("channel {channel} has {len} samples, expected {expected}")]
    RaggedChannels {
        channel: usize,
        len: usize,
        expected: usize,
    },

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shape mismatch for {what}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("range [{start}, {end}) lies outside a signal of {len} samples")]
    OutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("duplicate grade from grader `{grader_id}` for presentation `{presentation_id}`")]
    DuplicateGrade {
        grader_id: String,
        presentation_id: String,
    },

    #[error("grade {0} is outside the ODG scale {{0, -1, -2, -3, -4}}")]
    GradeOutOfScale(i32),

    #[error("config hash mismatch: checkpoint has {stored}, current config hashes to {current}")]
    ConfigHashMismatch { stored: String, current: String },

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("checkpoint is missing tensor `{0}`")]
    MissingTensor(String),

    #[error("non-finite loss at step {step}: d1={d1} d2={d2:?} g={g}")]
    NonFiniteLoss {
        step: u64,
        d1: f64,
        d2: Option<f64>,
        g: f64,
        batch_ids: Vec<String>,
    },

    #[error("data source failure: {0}")]
    Source(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
