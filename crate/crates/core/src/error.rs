use thiserror::Error;

use crate::lattice::LatticePoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point} lies outside the disk of radius {radius}")]
    OutsideDomain { point: LatticePoint, radius: u32 },

    #[error("the two marked points coincide at {0}")]
    CoincidentPoints(LatticePoint),

    #[error("target set is empty")]
    EmptyTargets,

    #[error("problem size {size} exceeds the limit {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("walk did not terminate within {0} steps")]
    StepCapExceeded(u64),

    #[error("matrix is singular or not positive definite (pivot {0})")]
    Singular(usize),

    #[error("iterative solve stalled after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("path is empty")]
    EmptyPath,

    #[error("walk record has no retained path")]
    PathNotRetained,

    #[error("not enough usable data points: {0}")]
    InsufficientData(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
