use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty polyhedron")]
    EmptyPolyhedron,
    #[error("distance to empty set")]
    DistanceToEmptySet,
    #[error("input is not a cone union")]
    NotACone,
    #[error("desk-scale limit exceeded: {what} = {found} > {limit}")]
    LimitExceeded {
        what: &'static str,
        limit: usize,
        found: usize,
    },
    #[error("point is not on the graph (distance {distance})")]
    OffGraph { distance: Rational },
    #[error("point is not in the set (distance {distance})")]
    NotInSet { distance: Rational },
    #[error("change-of-coordinates hypothesis violated: matrix lacks full row rank")]
    RankDeficient,
    #[error("function value is {0} at the query point")]
    InfiniteValue(&'static str),
    #[error("argument is outside the domain")]
    NotInDomain,
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("not an epigraph: (0, 1) is not a recession direction of every piece")]
    NotAnEpigraph,
    #[error("stratum boundary; refine instance")]
    StratumBoundary,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, PolyError>;
