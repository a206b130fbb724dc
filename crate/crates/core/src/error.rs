use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace is not one (got {0})")]
    InvalidTrace(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("channel is not trace preserving (residual {0:.3e})")]
    NotTracePreserving(f64),

    #[error("channel is not unital; the commutant characterisation of codes requires E(I) = I")]
    NotUnital,

    #[error("empty operator list")]
    Empty,

    #[error("operator basis does not span an algebra (product residual {0:.3e})")]
    NotAnAlgebra(f64),

    #[error("code is not unitarily correctable for this channel: {0}")]
    NotCorrectable(String),

    #[error("settings are informationally incomplete (rank {rank} < {needed})")]
    InformationallyIncomplete { rank: usize, needed: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
