use std::fmt;
use std::process::ExitCode;

use fisvdd::FisvddError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unusable input. Exit code 2.
    Input(String),
    /// The model failed its own consistency checks. Exit code 3.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Invariant(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "error: {msg}"),
            CliError::Invariant(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl From<FisvddError> for CliError {
    fn from(e: FisvddError) -> Self {
        match e {
            FisvddError::InvariantViolation(_)
            | FisvddError::IllConditionedShrink { .. }
            | FisvddError::CannotShrink => CliError::Invariant(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
