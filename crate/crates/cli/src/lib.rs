//! Library side of the `accsd` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
