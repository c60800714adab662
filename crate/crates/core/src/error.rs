use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid direction: norm {norm} is not 1 within tolerance")]
    InvalidDirection { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("unknown POVM element `{0}`")]
    MissingElement(String),

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("hypergraph has {elements} elements, exhaustive search is limited to {limit}")]
    SizeLimit { elements: usize, limit: usize },

    #[error("invalid dilation scheme: {0}")]
    InvalidScheme(String),

    #[error("schemes are not comparable: {0}")]
    IncomparableSchemes(String),

    #[error("matrix is not unitary (residual {residual:e})")]
    InvalidUnitary { residual: f64 },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("structure not found: {0}")]
    StructureNotFound(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid family: {0}")]
    InvalidFamily(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
