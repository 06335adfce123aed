use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("gamma^2 I - P is singular or indefinite (gamma = {gamma})")]
    SingularOrIndefinite { gamma: f64 },
    #[error("gamma = {gamma} is infeasible")]
    InfeasibleGamma { gamma: f64 },
    #[error("no feasible gamma found below {limit:e}")]
    NoFeasibleGammaFound { limit: f64 },
    #[error("gamma^2 I - P_{index} is singular")]
    SingularIterate { index: usize },
    #[error("sigma sequence must start with a sample (first bit 1)")]
    FirstBitNotOne,
    #[error("sigma sequence contains no sample")]
    AllZeros,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("improve step needs tau_i > tau_l, got {tau_i} and {tau_l}")]
    InvalidPair { tau_i: usize, tau_l: usize },
    #[error("shift {p} exceeds the admissible maximum {max}")]
    POutOfRange { p: usize, max: usize },
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("rate {0} outside the admissible range")]
    RateOutOfRange(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("interval cost overflowed at p = {p}")]
    Overflow { p: usize },
    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidModel(_) => "InvalidModel",
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::SingularOrIndefinite { .. } => "SingularOrIndefinite",
            Error::InfeasibleGamma { .. } => "InfeasibleGamma",
            Error::NoFeasibleGammaFound { .. } => "NoFeasibleGammaFound",
            Error::SingularIterate { .. } => "SingularIterate",
            Error::FirstBitNotOne => "FirstBitNotOne",
            Error::AllZeros => "AllZeros",
            Error::InvalidSchedule(_) => "InvalidSchedule",
            Error::InvalidPair { .. } => "InvalidPair",
            Error::POutOfRange { .. } => "POutOfRange",
            Error::InvalidArgs(_) => "InvalidArgs",
            Error::RateOutOfRange(_) => "RateOutOfRange",
            Error::TooLarge(_) => "TooLarge",
            Error::Overflow { .. } => "Overflow",
            Error::InvalidHorizon(_) => "InvalidHorizon",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::SingularOrIndefinite { .. }
                | Error::InfeasibleGamma { .. }
                | Error::NoFeasibleGammaFound { .. }
                | Error::SingularIterate { .. }
                | Error::Overflow { .. }
        )
    }
}
