use thiserror::Error;

/// Errors produced by the quaternion toolkit.
#[derive(Debug, Error)]
pub enum QError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate sampling distribution: {0}")]
    DegenerateDistribution(String),

    #[error("sampling error: requested {requested} indices but only {available} have positive probability")]
    Sampling { requested: usize, available: usize },

    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),

    #[error("SVD did not converge")]
    SvdConvergence,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = QError> = std::result::Result<T, E>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(QError::Parameter(msg.into()))
}
