use thiserror::Error;

use crate::autodiff::AdError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AdError),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("degenerate triangle {0} (zero area)")]
    DegenerateTriangle(usize),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("non-finite value {value} at mesh vertex {vertex}")]
    NonFiniteNodal { vertex: usize, value: f64 },

    #[error("field length {got} does not match mesh ({expected})")]
    FieldLength { expected: usize, got: usize },

    #[error("no error signal: all indicators are zero")]
    NoErrorSignal,

    #[error("invalid sampling configuration: {0}")]
    InvalidSampling(String),

    #[error("non-finite residual {value} at point {point:?}")]
    NonFiniteResidual { point: Vec<f64>, value: f64 },

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
