use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical routines and estimators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} failed after jitter retry)")]
    NotPositiveDefinite { pivot: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("non-finite value encountered: {0}")]
    NonFiniteValue(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("importance weights are degenerate (effective sample size {ess})")]
    AllWeightsDegenerate { ess: f64 },

    #[error("loss {0} cannot be evaluated for this model")]
    UnsupportedLossForModel(&'static str),

    #[error("loss {0} is incompatible with the model pair")]
    IncompatibleLoss(&'static str),

    #[error("degrees of freedom {dof} must exceed 2")]
    DegreesOfFreedomError { dof: f64 },

    #[error("maximum iterations ({0}) exceeded")]
    MaxIterExceeded(usize),

    #[error("information matrix is singular")]
    SingularInformation,

    #[error("objective is infinite at every starting design")]
    InfeasibleStart,

    #[error("objective is not finite at parameter {theta:?}")]
    NonFiniteObjective { theta: Vec<f64> },

    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

impl Error {
    /// Stable variant name, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::DomainError(_) => "DomainError",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::AllWeightsDegenerate { .. } => "AllWeightsDegenerate",
            Error::UnsupportedLossForModel(_) => "UnsupportedLossForModel",
            Error::IncompatibleLoss(_) => "IncompatibleLoss",
            Error::DegreesOfFreedomError { .. } => "DegreesOfFreedomError",
            Error::MaxIterExceeded(_) => "MaxIterExceeded",
            Error::SingularInformation => "SingularInformation",
            Error::InfeasibleStart => "InfeasibleStart",
            Error::NonFiniteObjective { .. } => "NonFiniteObjective",
            Error::InvalidDesign(_) => "InvalidDesign",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
