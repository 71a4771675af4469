use thiserror::Error;

#[derive(Debug, Error)]
pub enum FocalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown point identifier `{0}`")]
    UnknownPoint(String),

    #[error("malformed distance matrix: {0}")]
    MalformedMatrix(String),

    #[error("letter {index} is not an element of A: {elem}")]
    NotInA { index: usize, elem: String },

    #[error("operation `{op}` is not supported by family {family}")]
    Unsupported { op: &'static str, family: String },

    #[error("A-length oracle of family {0} has not been validated; use the unchecked metric to proceed anyway")]
    UnvalidatedOracle(String),

    #[error("window too large: {0}")]
    WindowTooLarge(String),

    #[error("horokernel did not stabilize within horizon {horizon}: trailing values {trace:?}")]
    NotStabilized { horizon: u64, trace: Vec<i64> },

    #[error("element never enters A within {0} applications of α")]
    DepthExceeded(u64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("empty fiber: level ranges {0:?} and {1:?} do not meet")]
    EmptyFiber((i64, i64), (i64, i64)),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FocalError>;
