use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("unknown channel: {0}")]
    UnknownChannel(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("malformed transactions: {0}")]
    MalformedTransactions(String),
    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),
    #[error("schedule does not match trace: {0}")]
    TraceMismatch(String),
    #[error("coefficient out of range at index {index}: {value}")]
    CoefficientOutOfRange { index: usize, value: f64 },
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("LP has {0} variables, above the dense solver limit")]
    LpTooLarge(usize),
    #[error("LP solution is not optimal ({0})")]
    NotOptimal(String),
    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("invalid caching instance: {0}")]
    InvalidCaching(String),
    #[error("schedule is not feasible for the caching reduction: {0}")]
    InfeasibleSchedule(String),
    #[error("transaction at step {0} cannot be routed under any modification")]
    Unroutable(usize),
    #[error("invalid adversary configuration: {0}")]
    InvalidAdversary(String),
    #[error("instance exceeds oracle size cap: {0}")]
    OracleCap(String),
    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),
    #[error("graph sampling failed: {0}")]
    Sampling(String),
    #[error("workload generation failed: {0}")]
    Workload(String),
    #[error("invalid bench configuration: {0}")]
    InvalidBench(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
