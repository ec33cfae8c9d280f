use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed trace record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("duplicate trace id `{0}` within group")]
    DuplicateTraceId(String),

    #[error("event label must be non-empty")]
    EmptyLabel,

    #[error("no binning spec for numeric feature `{0}`")]
    MissingBinning(String),

    #[error("non-finite value {value} for feature `{feature}`")]
    NonFinite { feature: String, value: f64 },

    #[error("cannot compute bins from an empty value list")]
    EmptyValues,

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParam { name: &'static str, message: String },

    #[error("test group is empty")]
    EmptyTestGroup,

    #[error("precision is undefined for a pattern with zero test support")]
    ZeroTestSupport,

    #[error("jaccard similarity is undefined for two empty sets")]
    EmptyJaccard,

    #[error("brute-force enumeration refused: {vocab}^{max_len} candidates exceeds the 10^6 guard")]
    EnumerationGuard { vocab: usize, max_len: usize },

    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("pattern {0:?} is missing from the global pattern index")]
    StaleIndex(Vec<String>),

    #[error("no analyses to index")]
    EmptyIndex,

    #[error("unsupported report schema `{0}`")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            message: message.into(),
        }
    }
}
