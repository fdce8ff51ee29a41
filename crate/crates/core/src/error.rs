use thiserror::Error;

/// Failure categories shared by every module.
///
/// The categories map one-to-one onto the command-line exit codes
/// (validation → 2, resource → 3, invariant → 4).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("certificate invalid: {0}")]
    Certificate(String),
    #[error("calibration self-test failed: {0}")]
    Calibration(String),
}

impl Error {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Dimension(_) | Error::Certificate(_) => 2,
            Error::Resource(_) => 3,
            Error::Contract(_) | Error::Calibration(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
