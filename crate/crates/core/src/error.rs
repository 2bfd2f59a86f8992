use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("no token survives the document-frequency cutoff (min_doc_freq = {0})")]
    EmptyVocabulary(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("contradictory conjunction: feature {0} appears with both polarities")]
    Contradiction(usize),

    #[error("power-set aggregation over k = {k} clauses refused (cap {cap}): it costs O(2^k * n) = {evaluations} formula evaluations")]
    PowersetTooLarge { k: usize, cap: usize, evaluations: u128 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
