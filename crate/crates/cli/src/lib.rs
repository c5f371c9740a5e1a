//! File formats and subcommands of the `plp` binary.

pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};
