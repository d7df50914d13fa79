use thiserror::Error;

/// Error type shared by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum SplatError {
    /// Caller handed in data that violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The input is formally valid but geometrically degenerate
    /// (rank-deficient normal equations, collinear point sets, ...).
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    /// A robust estimator exhausted its budget without a usable model.
    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    /// Surface extraction found no sign change to mesh.
    #[error("empty mesh: {0}")]
    EmptyMesh(String),

    /// An optimization produced a non-finite value; the message names
    /// the offending loss term.
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

impl SplatError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SplatError::InvalidInput(msg.into())
    }
}
