//! Scenario parsing, run artifacts and the `run`, `verify` and `export`
//! commands.

pub mod artifacts;
pub mod commands;
pub mod error;

pub use commands::{cmd_export, cmd_run, cmd_verify, RunFlags};
pub use error::{CliError, Result};
