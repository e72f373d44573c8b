//! Command-line front end: file formats, settings handling and the
//! `preprocess`, `oracle`, `train`, `summarize`, `evaluate`, `rouge` and
//! `lead` subcommands.

pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;

pub use error::CliError;
