use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A build or run step that did not produce a usable result.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolchainError {
    #[error("compiling {file} with `{compilation}` failed:\n{diagnostics}")]
    Compile {
        file: String,
        compilation: String,
        diagnostics: String,
    },
    #[error("linking failed:\n{0}")]
    Link(String),
    #[error("`{tool}` failed: {diagnostics}")]
    Tool { tool: String, diagnostics: String },
    #[error("test {test} failed: {diagnostics}")]
    Run { test: String, diagnostics: String },
    #[error("test {test} timed out after {after:?}")]
    Timeout { test: String, after: std::time::Duration },
    #[error("test {test} produced malformed output: {diagnostics}")]
    Protocol { test: String, diagnostics: String },
    #[error("{0}")]
    Io(String),
}

impl ToolchainError {
    /// Whether the failure happened before anything ran.
    pub fn is_build_failure(&self) -> bool {
        matches!(
            self,
            ToolchainError::Compile { .. } | ToolchainError::Link(_) | ToolchainError::Tool { .. }
        )
    }

    pub(crate) fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        ToolchainError::Io(format!("{context}: {e}"))
    }
}
