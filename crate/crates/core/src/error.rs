//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is rank deficient (rank {rank}, need {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decode result carries no trace")]
    MissingTrace,

    #[error("invalid list-FER curve: {0}")]
    InvalidCurve(String),

    #[error("target {target:e} is below the reachable floor {floor:e}")]
    Unreachable { target: f64, floor: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
