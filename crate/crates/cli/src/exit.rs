use std::fmt;

use vbisect_toolchain::{ConfigError, ToolchainError};

/// Process exit status. The numeric values are a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    VariabilityFound = 1,
    ConfigError = 2,
    ToolchainFailure = 3,
    AssumptionViolated = 4,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Combine the statuses of several runs; the most serious one wins.
    pub fn worst(self, other: Status) -> Status {
        if other.severity() > self.severity() {
            other
        } else {
            self
        }
    }

    fn severity(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::VariabilityFound => 1,
            Status::AssumptionViolated => 2,
            Status::ToolchainFailure => 3,
            Status::ConfigError => 4,
        }
    }
}

/// An error that ends the command, with the status it exits under.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(msg: impl fmt::Display) -> Self {
        Failure {
            status: Status::ConfigError,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn toolchain(msg: impl fmt::Display) -> Self {
        Failure {
            status: Status::ToolchainFailure,
            error: anyhow::anyhow!("{msg}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            status: Status::ConfigError,
            error: e.into(),
        }
    }
}

impl From<ToolchainError> for Failure {
    fn from(e: ToolchainError) -> Self {
        Failure {
            status: Status::ToolchainFailure,
            error: e.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            status: Status::ToolchainFailure,
            error: e.into(),
        }
    }
}

pub type CmdResult = Result<Status, Failure>;
