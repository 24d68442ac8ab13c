use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigenvalue sequence is not nonincreasing at index {index}")]
    NotSorted { index: usize },

    #[error("mixed point representations in one distance computation")]
    MixedRepresentation,

    #[error("{requested} modes exceed the Nyquist limit of {limit} for a {grid}-point grid")]
    Nyquist {
        requested: usize,
        limit: usize,
        grid: usize,
    },

    #[error("unlabeled vertices {component:?} are not connected to any labeled vertex")]
    Disconnected { component: Vec<usize> },

    #[error("singular linear system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
