use std::fmt;

/// CLI error classes and their exit codes: 2 usage/config, 3 numerical,
/// 4 I/O. (0 is success; clap's own flag errors also exit 2.)
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tmodel::ModelError> for CliError {
    fn from(e: tmodel::ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<qproj::QprojError> for CliError {
    fn from(e: qproj::QprojError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<train::TrainError> for CliError {
    fn from(e: train::TrainError) -> Self {
        match e {
            train::TrainError::Io(io) => CliError::Io(io.to_string()),
            train::TrainError::NonFiniteLoss { .. } | train::TrainError::NonFiniteGrad { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}
