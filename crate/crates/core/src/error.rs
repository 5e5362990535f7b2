use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has no entries")]
    Empty,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("spectral function is not finite at eigenvalue {eigenvalue:.6e}")]
    SpectralFunction { eigenvalue: f64 },

    #[error("eigensolver did not converge")]
    EigenSolver,

    #[error("not a positive matrix (minimum eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },

    #[error("not a density matrix (trace {trace:.12})")]
    NotNormalized { trace: f64 },

    #[error("state is not faithful (smallest eigenvalue {min_eig:.3e})")]
    NotFaithful { min_eig: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("support condition fails: s(psi) is not contained in s(phi)")]
    SupportCondition,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
