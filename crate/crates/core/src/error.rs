use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} offsets, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("expected a vector with {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("normal {0} is the zero vector")]
    ZeroNormal(usize),
    #[error("region is unbounded")]
    Unbounded,
    #[error("region is empty")]
    Empty,
    #[error("region is not full-dimensional")]
    LowerDimensional,
    #[error("half-spaces {first} and {second} define the same facet hyperplane")]
    DuplicateFacet { first: usize, second: usize },
    #[error("half-space {0} is redundant")]
    Redundant(usize),
    #[error("invalid rational `{0}`")]
    ParseRational(String),
    #[error("invalid input: {0}")]
    Parse(String),
    #[error("linear system is singular")]
    Singular,
    #[error("PL function has no pieces")]
    EmptyPl,
    #[error("simple PL function has zero slope")]
    ZeroSlope,
    #[error("crease does not meet the interior of the polytope")]
    CreaseOutside,
    #[error("search height must be at least 1")]
    BadHeight,
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("point {point:?} is outside the open polytope")]
    OutsideInterior { point: Vec<f64> },
    #[error("Hessian is not positive definite at {point:?}")]
    NotConvex { point: Vec<f64> },
    #[error("no grid point satisfies the margin")]
    EmptyMask,
    #[error("invalid numerical parameter: {0}")]
    BadParameter(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
