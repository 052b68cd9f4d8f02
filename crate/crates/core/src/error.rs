use thiserror::Error;

/// Errors produced by the analysis pipeline and its file formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FreqCacheError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("patch size {patch} does not divide frame {rows}x{cols}")]
    PatchDivisibility {
        patch: usize,
        rows: usize,
        cols: usize,
    },

    #[error("degenerate spectrum")]
    DegenerateSpectrum,

    #[error("no texture; displacement undefined")]
    NoTexture,

    #[error("spectrum is not Hermitian: imaginary residue {residue:e} exceeds {limit:e}")]
    NonRealSpectrum { residue: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sequence needs at least {needed} frames, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("step {step}: {source}")]
    SequenceStep {
        step: usize,
        #[source]
        source: Box<FreqCacheError>,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("truncated payload: expected {expected} bytes, missing from byte offset {offset}")]
    Truncated { offset: usize, expected: usize },

    #[error("decision invariant violated at step {step}: {message}")]
    InvariantViolation { step: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FreqCacheError {
    fn from(err: std::io::Error) -> Self {
        FreqCacheError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FreqCacheError>;
