//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // manifest / corpus
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("manifest line {line}: duplicate utt_id `{utt_id}`")]
    DuplicateUttId { utt_id: String, line: usize },

    // audio input
    #[error("wav `{path}`: {msg}")]
    Wav { path: String, msg: String },
    #[error("unsupported sample rate {got} Hz (expected {expected} Hz)")]
    SampleRate { got: u32, expected: u32 },

    // dsp
    #[error("signal too short: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    // fmx container
    #[error("fmx: bad magic")]
    BadMagic,
    #[error("fmx: truncated: expected {expected} payload bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("fmx: non-finite value at element {0}")]
    NonFinite(usize),
    #[error("fmx: header declares {rows}x{cols} elements, exceeding the cap of {cap}")]
    OversizeHeader { rows: u32, cols: u32, cap: u64 },

    // splits
    #[error("too few records: {got}, need at least {needed}")]
    TooFewRecords { got: usize, needed: usize },
    #[error("dialect {dialect} has only {speakers} speakers, need more than {needed}")]
    TooFewSpeakers {
        dialect: String,
        speakers: usize,
        needed: usize,
    },

    // classifier
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("label {got} out of range (n_classes = {n_classes})")]
    LabelOutOfRange { got: usize, n_classes: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    // evaluation
    #[error("empty prediction list")]
    EmptyPredictions,
    #[error("cannot aggregate reports with mixed configurations: {0}")]
    MixedReports(String),

    // lid analysis
    #[error("lid line {line}: {msg}")]
    Lid { line: usize, msg: String },
    #[error("no LID posterior for utt_id `{0}`")]
    MissingPosterior(String),
    #[error("LID posterior references unknown utt_id `{0}`")]
    UnknownUttId(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
