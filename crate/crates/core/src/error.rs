use alloc::string::String;

/// Why a fit concluded that the maximum likelihood estimate does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NonExistenceKind {
    /// Some degree parameter left the divergence bound.
    Diverged,
    /// The iteration budget ran out without the score norm decreasing.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("link probability requested for self-loop ({0}, {0})")]
    SelfLoopRequested(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("maximum likelihood estimate does not exist ({kind:?} after {iterations} iterations)")]
    NonExistence {
        kind: NonExistenceKind,
        iterations: usize,
    },

    #[error("degenerate network: node {node} has {what}")]
    DegenerateNetwork { node: usize, what: &'static str },

    #[error("information matrix is numerically singular: {0}")]
    SingularInformation(&'static str),

    #[error("covariate coefficients are not identified: second-moment matrix of Z is rank deficient")]
    GammaUnidentified,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),

    #[error("operation requires the {expected} restriction")]
    RestrictionMismatch { expected: &'static str },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
