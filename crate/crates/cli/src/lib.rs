//! Library side of the `critnls` command: configuration and the subcommands.

pub mod commands;
pub mod config;

pub use commands::{CliError, CHECK_FAILED};
pub use config::{CheckKind, RunConfig};
