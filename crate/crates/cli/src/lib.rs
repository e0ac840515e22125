//! Command-line front end for the `hyperbin` library: configuration parsing,
//! experiment runners and subcommand dispatch.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;

pub use cli::{execute, run, Cli, Command, Output};
pub use config::Config;
pub use error::{CliError, CliResult};
