use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel singular at z = w with eps = 0")]
    Singular,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("quadrature failure: achieved tolerance {achieved:.3e}")]
    Quadrature { achieved: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
