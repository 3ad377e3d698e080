//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JeepError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quantized coefficient {value} at block {block}, mode ({k},{l}) outside [-1024, 1020]")]
    CoefficientRange {
        value: i32,
        block: usize,
        k: usize,
        l: usize,
    },

    #[error("infeasible payload: requested {requested_bits:.3} bits, capacity {capacity_bits:.3} bits")]
    InfeasiblePayload {
        requested_bits: f64,
        capacity_bits: f64,
    },

    #[error("solver did not converge: {0}")]
    SolverDiverged(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, JeepError>;
