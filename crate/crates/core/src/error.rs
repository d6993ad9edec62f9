use thiserror::Error;

/// Errors raised by the lattice, cone, and stack computations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cone is not pointed")]
    NotPointed,

    #[error("cone is not full-dimensional (rank {rank} in a lattice of rank {ambient})")]
    NotFullDimensional { rank: usize, ambient: usize },

    #[error("grading is not positive on generator {generator}")]
    NonPositiveGrading { generator: String },

    #[error("class has a fractional power of L: {0}")]
    NotIntegral(String),

    #[error("ray {ray} contains no column of nu")]
    RayUncovered { ray: usize },

    #[error("column {column} of nu lies outside the support of the fan")]
    OutsideSupport { column: usize },

    #[error("cokernel of nu is infinite (rank {rank} in a lattice of rank {ambient})")]
    CokernelInfinite { rank: usize, ambient: usize },

    #[error("cone {cone} is not Q-Gorenstein")]
    NotQGorenstein { cone: usize },

    #[error("fantastack is not combinatorially crepant: column {column} is off the height-m hyperplane")]
    NotCrepant { column: usize },

    #[error("column {column} of nu is zero, so the good moduli space map is not an isomorphism over the torus")]
    ZeroColumn { column: usize },

    #[error("point {point} lies outside the cone")]
    OutsideCone { point: String },

    #[error("vector {0} has a negative coordinate")]
    NegativeCoordinate(String),

    #[error("too many nu columns for exhaustive subset search: {r} > {max}")]
    TooManyColumns { r: usize, max: usize },

    #[error("grade of point {point} differs between maximal cones: {first} vs {second}")]
    InconsistentGrade {
        point: String,
        first: String,
        second: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
