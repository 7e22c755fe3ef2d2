//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by corpus parsing, encoding, model training and the
/// file-level pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed input: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown tag scheme for this operation: expected {expected}, got {got}")]
    SchemeMismatch { expected: String, got: String },

    #[error("cannot parse tag {0:?}")]
    BadTag(String),

    #[error("cannot parse mutation type {0:?}")]
    BadMutationType(String),

    #[error("overlapping spans at token {token}")]
    OverlappingSpans { token: usize },

    #[error("span ({start},{end}) exceeds sentence length {len}")]
    SpanOutOfRange { start: usize, end: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no embedding for doc {doc_id:?} sentence {sentence_index} token {token_index}")]
    MissingEmbedding {
        doc_id: String,
        sentence_index: usize,
        token_index: usize,
    },

    #[error("line {line}: duplicate embedding key {key}")]
    DuplicateEmbedding { line: usize, key: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("gold tags violate the transition mask in doc {doc_id:?} sentence {sentence_index}")]
    InvalidGold {
        doc_id: String,
        sentence_index: usize,
    },

    #[error("sequence length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unknown report format {0:?} (expected json or tsv)")]
    BadReportFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("{0}")]
    Pipeline(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
