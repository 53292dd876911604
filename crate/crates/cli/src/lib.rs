//! Batch front end for `rsvub-core`: TOML configs, the four run modes and
//! their CSV/JSON artifacts.

pub mod config;
pub mod execute;
pub mod output;
pub mod probe;

pub use config::{parse_config, ConfigError, Mode, Overrides, RunConfig};
pub use execute::{execute, CliError, RunStatus, Summary};
