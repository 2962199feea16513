//! Library half of the `shrinkdim` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, Overrides, Product, RunSettings};
pub use error::CliError;
