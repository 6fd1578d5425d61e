use std::fmt::Display;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config{}: {message}", if path.is_empty() { String::new() } else { format!(" at `{path}`") })]
    Parse { path: String, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error(transparent)]
    Core(#[from] llb_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("unknown command `{0}` (expected simulate, energy, uniqueness, consistency or optimize)")]
    UnknownCommand(String),
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Display) -> Self {
        CliError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for usage and configuration problems, 1 for failed runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Field { .. } | CliError::UnknownCommand(_) => 2,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}
