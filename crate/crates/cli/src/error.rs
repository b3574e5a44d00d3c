use std::path::PathBuf;

use lodo_core::Error as CoreError;
use thiserror::Error;

/// Failures of a CLI command, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("assumption check failed: {0}")]
    Assumption(String),

    #[error("observer not certified: {0}")]
    Uncertified(String),

    #[error("numerical failure: {0}")]
    Numerical(CoreError),

    #[error("post-condition check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// `0` success, `1` i/o, `2` configuration, `3` plant or generator
    /// assumptions, `4` certification, `5` numerical failure, `6` a
    /// post-condition check of a completed run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Uncertified(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::CheckFailed(_) => 6,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(m) => CliError::Config(m),
            CoreError::Assumption(m) => CliError::Assumption(m),
            CoreError::RomCollision(_) => CliError::Assumption(e.to_string()),
            CoreError::Uncertified(_) => CliError::Uncertified(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let errs = [
            CliError::io("x", std::io::Error::other("boom")),
            CliError::Config(String::new()),
            CliError::Assumption(String::new()),
            CliError::Uncertified(String::new()),
            CliError::Numerical(CoreError::Internal(String::new())),
            CliError::CheckFailed(String::new()),
        ];
        let mut codes: Vec<i32> = errs.iter().map(CliError::exit_code).collect();
        codes.dedup();
        assert_eq!(codes, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn core_errors_map_by_kind() {
        assert_eq!(CliError::from(CoreError::RomCollision(0.0)).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::Uncertified(0.1)).exit_code(), 4);
        assert_eq!(CliError::from(CoreError::StepTooLarge(3.0)).exit_code(), 5);
        assert_eq!(CliError::from(CoreError::InvalidInput("x".into())).exit_code(), 2);
    }
}
