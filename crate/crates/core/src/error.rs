use thiserror::Error;

use crate::network::ClaimVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<ClaimVector>,
    },

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("correlation matrix is not positive semi-definite (pivot {pivot} = {value:e})")]
    NotPositiveSemiDefinite { pivot: usize, value: f64 },

    #[error("draw {draw} failed: {source}")]
    Draw {
        draw: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("sinkhorn balancing failed: {0}")]
    Balancing(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for numerical failures of the solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::Singular(_) | Error::Balancing(_) => true,
            Error::Draw { source, .. } | Error::Cell { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    /// True for rejected input: malformed configs, invalid parameters or
    /// networks.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidNetwork(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter { .. }
            | Error::NotPositiveSemiDefinite { .. }
            | Error::Config(_)
            | Error::Json(_) => true,
            Error::Draw { source, .. } | Error::Cell { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    pub(crate) fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
