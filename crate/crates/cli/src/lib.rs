//! Command-line driver: argument parsing, config merging and dispatch.

pub mod args;
pub mod commands;
pub mod config;

pub use args::{Cli, Command};
pub use commands::dispatch;
pub use config::RunConfig;
