use thiserror::Error;

use crate::linalg::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite value in matrix or vector")]
    NonFinite,

    #[error("matrix is singular to working precision (rank deficiency {rank_deficiency})")]
    Singular { rank_deficiency: usize },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("generator is defective near eigenvalue {eigenvalue}: eigenvectors do not span the space")]
    Defective { eigenvalue: C64 },

    #[error("non-decaying mode with eigenvalue {eigenvalue} (trapped subspace)")]
    NonDecayingMode { eigenvalue: C64 },

    #[error("no unique steady state: generator is singular (trapped subspace, rank deficiency {rank_deficiency})")]
    TrappedSubspace { rank_deficiency: usize },

    #[error("direct integration became unstable at t = {time}")]
    Instability { time: f64 },

    #[error("metric operator corrupted: quadratic form has imaginary part {imaginary:e}")]
    MetricCorruption { imaginary: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unbounded growth: {0}")]
    UnboundedGrowth(String),

    #[error("unsupported relaxation: {0}")]
    UnsupportedRelaxation(String),

    #[error("no fixture with id {0} (valid ids are 1-4)")]
    InvalidFixture(u32),

    #[error("invalid trajectory: {0}")]
    Trajectory(String),
}

impl Error {
    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
