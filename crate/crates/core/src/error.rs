use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid price vector: {0}")]
    InvalidAction(String),

    #[error("energy cost d·g = {0} is not positive; log is undefined")]
    NonPositiveCost(f64),

    #[error("smirl reward requested from an empty buffer")]
    EmptyBuffer,

    #[error("cannot project a zero vector onto the L1 sphere")]
    ZeroVector,

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("batch holds {actual} transitions, expected {expected}")]
    BatchSize { expected: usize, actual: usize },

    #[error("non-finite loss at epoch {epoch}, minibatch {minibatch}: policy={policy} value={value}")]
    NonFiniteLoss {
        epoch: usize,
        minibatch: usize,
        policy: f64,
        value: f64,
    },

    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: &'static str, reason: String },

    #[error("{0}")]
    Sink(String),
}
