//! Configuration, orchestration and file output behind the `selab` binary.
//!
//! Exit codes: `0` success, `1` failed verdict, `2` configuration or I/O
//! error, `3` solver failure.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{cmd_manufactured, cmd_report, cmd_solve, cmd_sweep, ManufacturedArgs};
pub use config::{RunConfig, SweepCase, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("solver failure: {0}")]
    Solver(selab_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<selab_core::Error> for CliError {
    /// Validation failures are configuration errors; everything raised while
    /// iterating is a solver failure.
    fn from(e: selab_core::Error) -> Self {
        use selab_core::Error as E;
        match e {
            E::DimensionTooSmall(_)
            | E::InvalidSpec(_)
            | E::NotIntegrable { .. }
            | E::InvalidMesh(_)
            | E::InvalidArgument(_) => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
