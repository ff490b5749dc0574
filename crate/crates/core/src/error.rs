use thiserror::Error;

/// Errors raised by model construction and the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain needs at least 2 unit cells, got {0}")]
    TooFewCells(usize),

    #[error("hopping {name} must be finite, got {value}")]
    NonFiniteHopping { name: &'static str, value: f64 },

    #[error("direction must have unit norm (|n| = {0})")]
    NonUnitDirection(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver failed to converge for a {0}x{0} matrix")]
    NoConvergence(usize),

    #[error("temperature must be finite and non-negative, got {0}")]
    InvalidTemperature(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),

    #[error("QFI matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("QFI matrix imaginary residue {0:e} exceeds 1e-10")]
    ImaginaryResidue(f64),

    #[error("finite-difference step {0} outside [1e-6, 1e-2]")]
    StepOutOfRange(f64),

    #[error("oracle dimension {0} exceeds 64")]
    OracleTooLarge(usize),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("quantity {0} absent from every record")]
    QuantityAbsent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
