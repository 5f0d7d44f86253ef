use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("coordinate {0} is not finite")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The two half-spaces of a Haugazeau step (or the constraints handed to
    /// the QP oracle) have no common point.
    #[error("half-space intersection is empty")]
    EmptyIntersection,

    #[error("declared fixed point is not fixed (residual {0:e})")]
    NotFixedPoint(f64),

    #[error("set is unbounded")]
    Unbounded,

    #[error("map is not a strict pseudocontraction (estimated kappa {0})")]
    NotStrictPseudocontraction(f64),

    #[error("map failed monotonicity certification (worst margin {0:e})")]
    NotMonotone(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
