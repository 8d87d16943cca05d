//! Batch front end for `apsigma-core`: surface syntax, session settings and
//! JSON reports.

// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod expr;
pub mod report;

pub use commands::{run_command, Command};
pub use config::{OutputFormat, SessionConfig};
pub use expr::{parse_ap_expression, parse_basis, parse_frequency, render, ParseError};
pub use report::{Report, Status, SCHEMA};
