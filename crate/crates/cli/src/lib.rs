//! Command-line front end: curve and point files, the `sigma`, `height` and
//! `verify` subcommands, and exit-code mapping.

pub mod commands;
pub mod error;
pub mod input;

pub use commands::{execute, Cli};
pub use error::{CliError, CliResult};
