use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the model domain: {0}")]
    Domain(String),

    #[error("vector is not tangent at the base point: [x, v] = {product:e}")]
    NotTangent { product: f64 },

    #[error("tangent vector is not spacelike: [v, v] = {product:e}")]
    NotSpacelike { product: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by non-finite values or loss of representability
    /// during an iterative procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalAbort(_))
    }
}
