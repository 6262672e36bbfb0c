use thiserror::Error;

/// Errors produced by the modem simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input data does not satisfy an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// An operation was applied to a controller running a different method.
    #[error("threshold controller misuse: {0}")]
    StateMisuse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
