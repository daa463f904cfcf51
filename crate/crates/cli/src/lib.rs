//! Command-line frontend for `caplab`: config resolution and dispatch.
//!
//! Every command writes `manifest.json` (with the resolved config) and
//! `results.csv` into its output directory. Exit codes: 0 on success, 1 on
//! bad input or I/O failure, 2 when the run disproves the property it checks.

pub mod commands;
pub mod config;

pub use commands::{dispatch, DispatchError, EXIT_DISPROVED, EXIT_ERROR};
pub use config::{cli, parse_config, Command, Parsed, RunConfig, UsageError};
