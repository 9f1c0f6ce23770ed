use std::fmt::Display;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or unusable input; exit code 1.
    #[error("{0}")]
    Input(String),
    /// Too much of the requested data could not be obtained; exit code 2.
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Partial(_) => 2,
        }
    }
}

/// Wraps an error as an input error with a prefix.
pub fn ctx<E: Display>(what: impl Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{what}: {e}"))
}

pub type CliResult<T> = Result<T, CliError>;
