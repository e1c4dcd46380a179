use std::fmt;

use critnet_core::Error as CoreError;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Validation = 2,
    Runtime = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError {
            kind: ExitKind::Usage,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> CliError {
        CliError {
            kind: ExitKind::Validation,
            msg: msg.into(),
        }
    }

    pub fn runtime(msg: impl Into<String>) -> CliError {
        CliError {
            kind: ExitKind::Runtime,
            msg: msg.into(),
        }
    }

    /// An upstream artifact is absent; names the command that produces it.
    pub fn missing(what: &str, path: &std::path::Path, stage: &str) -> CliError {
        CliError::validation(format!(
            "missing {what} at {}; run `critnet {stage}` first",
            path.display()
        ))
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io { .. } | CoreError::Diverged(_) | CoreError::NoConvergence { .. } => {
                CliError::runtime(e.to_string())
            }
            other => CliError::validation(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
