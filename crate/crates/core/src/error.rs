use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rate {0}: rates must be finite and > 0")]
    InvalidRate(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("joint state space has {states} states, cap is {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },

    #[error("invalid intensity matrix: {0}")]
    InvalidGenerator(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("all sample weights are zero (log-weight -inf)")]
    DegenerateSamples,

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
