use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: expected {expected} criteria, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("criterion {position} has score {value}, outside [1, {m}]")]
    CoordinateOutOfRange { position: usize, value: u32, m: u32 },

    #[error("record {index}: score {value} outside [{min}, {max}]")]
    ScoreOutOfRange {
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("constraint graph contains a cycle")]
    CyclicGraph,

    #[error("missing value for node {0}")]
    MissingValue(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("no valid records")]
    NoValidRecords,

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("unsupported model document version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
