use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Cholesky hit a non-positive pivot. `pivot` is the zero-based row index.
    #[error("matrix is not positive definite (failed at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("degrees of freedom {df} too small for dimension {dim}")]
    DegreesOfFreedom { df: f64, dim: usize },

    /// A Schur complement of Sigma was not positive (ξ for the outcome
    /// equation, ω for the instrument equation).
    #[error("invalid error covariance: {which} = {value} is not positive")]
    InvalidCovariance { which: &'static str, value: f64 },

    /// The endogenous coefficient is in the outcome model but numerically
    /// zero, so the doubled system cannot be formed.
    #[error(
        "endogenous coefficient {beta:e} is numerically zero while included in the outcome model"
    )]
    DegenerateEndogenous { beta: f64 },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid model pair: {0}")]
    InvalidModel(String),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("variable {index} of the {stage} stage is never included")]
    NeverIncluded { stage: &'static str, index: usize },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Degeneracies the sampler recovers from by keeping the previous
    /// first-stage state.
    pub fn is_doubled_system_failure(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::DegenerateEndogenous { .. }
        )
    }

    /// Numerical breakdown, as opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AtIteration { source, .. } => source.is_numerical(),
            Error::NotPositiveDefinite { .. }
            | Error::NotSymmetric { .. }
            | Error::DegreesOfFreedom { .. }
            | Error::InvalidCovariance { .. }
            | Error::DegenerateEndogenous { .. } => true,
            _ => false,
        }
    }
}
