use thiserror::Error;

#[derive(Debug, Error)]
pub enum McfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter `{field}` out of range: {reason}")]
    Range { field: String, reason: String },

    #[error("{what}: achieved error {achieved:e} at {at}")]
    Tolerance { what: String, achieved: f64, at: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("profile is not monotone near node {node}; cannot invert the chart")]
    NonMonotone { node: usize },

    #[error("division by zero curvature at node {node}")]
    ZeroCurvature { node: usize },

    #[error("chart mismatch: expected {expected}, found {found}")]
    Chart { expected: String, found: String },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("barrier escape: {0}")]
    Escape(String),

    #[error("step rejected: {0}")]
    StepFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, McfError>;
