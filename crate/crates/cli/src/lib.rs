//! Scenario runner for the `chp` library: configs in, CSV and JSON out.

pub mod commands;
pub mod config;
pub mod error;
pub mod scenario;

pub use commands::{cmd_convergence, cmd_run, cmd_verify, Outcome, RunOptions};
pub use error::{CliError, Result};
