//! Implementation of the `drn` command-line tool: dataset generation,
//! training, evaluation, property checks and experiment sweeps, all seeded
//! and emitting CSV artifacts.

use std::fmt;

pub mod arch;
pub mod commands;
pub mod config;
pub mod sweep;

/// Command failures, split by exit code: usage errors exit 1, failed
/// property checks exit 2, runtime errors exit 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    CheckFailure,
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::CheckFailure => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::CheckFailure => write!(f, "one or more checks failed"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<drn::data::DataError> for CliError {
    fn from(e: drn::data::DataError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<drn::train::TrainError> for CliError {
    fn from(e: drn::train::TrainError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<drn::ckpt::CkptError> for CliError {
    fn from(e: drn::ckpt::CkptError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<drn::net::NetError> for CliError {
    fn from(e: drn::net::NetError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<drn::dist::DistError> for CliError {
    fn from(e: drn::dist::DistError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<arch::ArchError> for CliError {
    fn from(e: arch::ArchError) -> Self {
        CliError::Usage(e.to_string())
    }
}
