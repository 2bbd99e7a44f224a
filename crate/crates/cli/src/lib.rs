//! Configuration, output files and study drivers for the `mkfk` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod studies;

pub use commands::{execute, Command, ExitStatus};
pub use config::{ConfigError, RunConfig};
