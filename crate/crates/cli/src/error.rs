use std::fmt;
use std::path::Path;

use viscoflow_core::Error;

/// Process exit codes.
pub mod code {
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const VIOLATION: i32 = 4;
}

/// An error that ends the process with a specific exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: code::CONFIG,
            message: message.into(),
        }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        Self {
            code: code::VIOLATION,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            code: code::FAILURE,
            message: message.into(),
        }
    }

    /// A parse error in a JSON file, located by line and column.
    pub fn json(path: &Path, e: &serde_json::Error) -> Self {
        Self::config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    }

    /// Prefixes the message with some context.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Config(_) => code::CONFIG,
            Error::NonConvergence { .. } | Error::DegenerateStep { .. } | Error::Domain { .. } | Error::Singular(_) => {
                code::SOLVER
            }
            _ => code::FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failure(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
