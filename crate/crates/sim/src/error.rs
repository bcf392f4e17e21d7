use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("system file: {0}")]
    System(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("bad trace header: {0}")]
    Header(String),
    #[error("exploration stopped after {0} states (raise the state cap or lower the horizon)")]
    Explosion(usize),
    #[error("{0}")]
    Unsupported(String),
}
