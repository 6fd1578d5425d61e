//! Configuration loading, experiment dispatch and artifact output for the
//! `llb` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, Overrides};
pub use config::{load_config, parse_config, resolve, ConfigFile, RunConfig};
pub use error::CliError;
pub use output::RunManifest;
