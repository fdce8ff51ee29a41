use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] majsos::error::Error),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => e.exit_code(),
            CliError::Validation(_) | CliError::Csv(_) => 2,
            CliError::Output(_) | CliError::Io(_) => 3,
        }
    }

    /// A closed downstream pipe (`majsos … | head`) is not a failure.
    pub fn is_broken_pipe(&self) -> bool {
        let io = match self {
            CliError::Io(e) => Some(e),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    }
}

/// serde_json errors carry line and column; keep them in the message.
pub fn json_error(what: &str, e: serde_json::Error) -> CliError {
    CliError::Validation(format!("{what}: {e}"))
}
