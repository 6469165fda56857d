use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |M - M^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid subsystem specification: {0}")]
    InvalidSubsystems(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("outcome has zero probability ({prob:e})")]
    ZeroProbability { prob: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("square-root argument negative in {term}: {value:e}")]
    SqrtDomain { term: &'static str, value: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}
