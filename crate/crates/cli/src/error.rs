use std::fmt;
use std::path::Path;

/// Command failure, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Invalid settings or inputs that parse but make no sense.
    Validation(String),
    /// A required input could not be read.
    Missing(String),
    /// An artifact exists but is damaged or of the wrong kind.
    Corrupt(String),
    /// Every requested metric was undefined.
    AllUndefined(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Missing(_) => 2,
            CliError::Corrupt(_) => 3,
            CliError::AllUndefined(_) => 4,
        }
    }

    pub fn missing(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Missing(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m)
            | CliError::Missing(m)
            | CliError::Corrupt(m)
            | CliError::AllUndefined(m) => f.write_str(m),
        }
    }
}

impl From<fairlm::Error> for CliError {
    fn from(e: fairlm::Error) -> Self {
        use fairlm::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } => CliError::Missing(msg),
            E::CheckpointMagic
            | E::CheckpointVersion(_)
            | E::CheckpointTruncated(_)
            | E::CheckpointShape(_) => CliError::Corrupt(msg),
            _ => CliError::Validation(msg),
        }
    }
}
