//! Command implementations behind the `mrgagents` binary.
//!
//! Every command reads one [`PipelineConfig`] TOML file; a few command-line
//! flags override single fields.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{Overrides, PipelineConfig};
pub use error::CliError;
