//! CLI error taxonomy mapped onto exit codes: usage problems exit 1, data
//! problems exit 2.

use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration: exit code 1.
    Usage(String),
    /// Broken or inconsistent data, I/O failures, numeric errors: exit 2.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> CliError {
        CliError::Data(format!("io error on {}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tgslmm_core::Error> for CliError {
    fn from(err: tgslmm_core::Error) -> Self {
        match err {
            tgslmm_core::Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(format!("json error: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
