use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: extents must be positive and finite")]
    InvalidDomain,
    #[error("incompatible meshes: {0}")]
    IncompatibleMesh(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("unsupported nonlinearity: {0}")]
    UnsupportedNonlinearity(&'static str),
    #[error("zero pivot in row {row} of the banded factorization")]
    ZeroPivot { row: usize },
    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    IterativeNotConverged { iterations: usize, residual: f64 },
    #[error("fixed-point iteration did not converge in step {step} after {iterations} iterations (increment {increment:e}, residual {residual:e})")]
    StepFailure {
        step: usize,
        iterations: usize,
        increment: f64,
        residual: f64,
    },
    #[error("gradient flow did not converge after {iterations} outer steps (last increment {increment:e})")]
    FlowNotConverged { iterations: usize, increment: f64 },
    #[error("gradient flow energy kept increasing after {halvings} step-size halvings")]
    FlowEnergyIncrease { halvings: usize },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
