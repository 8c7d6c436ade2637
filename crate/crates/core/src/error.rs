use thiserror::Error;

/// Errors raised by the pooling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("empirical distribution requested for a subproblem with no data")]
    ZeroData,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid pooling amount {0}")]
    InvalidAlpha(f64),
    #[error("invalid cost model: {0}")]
    InvalidCost(String),
    #[error("invalid subproblem: {0}")]
    InvalidInstance(String),
    #[error("empty feasible set")]
    EmptyFeasibleSet,
    #[error("alpha grid is empty")]
    EmptyGrid,
    #[error("invalid alpha grid: {0}")]
    InvalidGrid(String),
    #[error("anchor candidate set is empty")]
    EmptyCandidates,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("subproblem {0} has no true distribution")]
    MissingTruth(usize),
    #[error("invalid support bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("dates for store {store} are not strictly increasing at row {row}")]
    NonMonotoneDates { store: String, row: usize },
    #[error("degenerate range: all values equal {0}")]
    DegenerateRange(f64),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
