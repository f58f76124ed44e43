use std::fmt;

/// CLI failures carry the process exit code: 1 for analytic errors (bad
/// data, failed metrics), 2 for usage and configuration errors.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Analytic(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Analytic(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Analytic(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

pub fn analytic(message: impl Into<String>) -> CliError {
    CliError::Analytic(message.into())
}
