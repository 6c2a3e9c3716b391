use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("term is not separable into an x-factor and a xi-factor: {0}")]
    NonSeparable(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("chiral flag mismatch: {0}")]
    ChiralMismatch(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("degree computation failed: {0}")]
    Degree(String),
    #[error("symbol is singular at {location:?} (radius too small?)")]
    Singular { location: Vec<f64> },
    #[error("index integral did not converge: {0}")]
    NotConverged(String),
    #[error("spectral computation failed: {0}")]
    Spectral(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("capability: {0}")]
    Capability(String),
    #[error("linear algebra: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
