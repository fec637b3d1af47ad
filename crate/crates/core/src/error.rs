use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("residues belong to different moduli ({0} vs {1})")]
    ModulusMismatch(u64, u64),
    #[error("{value} is not a unit modulo {modulus}")]
    NotAUnit { value: u64, modulus: u64 },
    #[error("{value} is not a square modulo {modulus}")]
    NotASquare { value: u64, modulus: u64 },
    #[error("closed-form evaluation needs n >= 2 (got n = {0})")]
    UnsupportedDepth(u32),
    #[error("phase fails the differentiability check: {0}")]
    InvalidPhase(String),
    #[error("quadratic coefficient is not a unit at {0}")]
    SingularQuadratic(u64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
