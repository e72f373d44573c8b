use std::fmt;
use std::path::Path;

/// Failure of a subcommand, classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, settings or combinations of inputs.
    Usage(String),
    /// Missing, unreadable or malformed input data.
    Data(String),
    /// Anything that indicates a bug rather than bad input.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        CliError::Internal(msg.to_string())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<refresh_core::SettingsError> for CliError {
    fn from(e: refresh_core::SettingsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<refresh_core::TrainError> for CliError {
    fn from(e: refresh_core::TrainError) -> Self {
        use refresh_core::TrainError as E;
        match e {
            E::Model(m) => m.into(),
            E::Config(_) => CliError::Usage(e.to_string()),
            E::Nn(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<refresh_core::model::ModelError> for CliError {
    fn from(e: refresh_core::model::ModelError) -> Self {
        use refresh_core::model::ModelError as E;
        match e {
            E::Config(_) => CliError::Usage(e.to_string()),
            E::Nn(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<refresh_core::OracleError> for CliError {
    fn from(e: refresh_core::OracleError) -> Self {
        match e {
            refresh_core::OracleError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
