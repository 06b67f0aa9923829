//! Command-line front end: configuration, command dispatch and report formatting.
//!
//! Every command is a pure function from a [`config::RunConfig`] to a
//! [`commands::Report`] holding the text for standard output and any files to
//! write, so identical inputs give byte-identical outputs whatever the thread
//! count.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod verify;

pub use commands::{run, CliError, Command, Report};
pub use config::{parse_config, ConfigError, Overrides, RunConfig};

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when a verification check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for configuration and input errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numeric failures (divergence, non-convergence, underflow).
pub const EXIT_NUMERIC: i32 = 3;

/// A number in the 17-significant-digit exponent format used by every CSV.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
