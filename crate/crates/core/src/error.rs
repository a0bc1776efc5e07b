use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for bad input or configuration, 3 for numeric
    /// failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::DivisionByZero(_) | Error::Convergence(_) => 3,
            _ => 2,
        }
    }
}
