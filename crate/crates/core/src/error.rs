use thiserror::Error;

use crate::samplers::TreeViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("reversal undefined: state {state} has zero mass")]
    ReversalUndefined { state: usize },

    #[error("target is not stationary for the kernel (max residual {residual:e})")]
    StationarityViolation { residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("unsupported representation: {0}")]
    Unsupported(&'static str),

    #[error("invalid marked tree: {0}")]
    InvalidTree(TreeViolation),

    #[error("invalid statistic: {0}")]
    InvalidStatistic(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("enumeration intractable: {needed} terms exceeds limit {limit}")]
    Intractable { needed: u128, limit: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<TreeViolation> for Error {
    fn from(v: TreeViolation) -> Self {
        Error::InvalidTree(v)
    }
}
