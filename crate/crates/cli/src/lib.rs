//! Front end for running spectrum, gate, stability and evolution
//! experiments from a JSON configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command};
pub use config::{parse_config, Overrides, RunConfig};
pub use error::CliError;
