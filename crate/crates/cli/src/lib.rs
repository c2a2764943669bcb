//! Command-line driver: configuration parsing, run orchestration,
//! parameter sweeps and CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod sweep;
pub mod verify;

pub use config::{RawConfig, RunConfig};
pub use error::{CliError, CliResult};
