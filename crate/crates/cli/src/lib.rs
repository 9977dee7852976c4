//! Command-line harness for `szego-core`: kernel builds with an on-disk cache,
//! point scans, distance queries and the verification suites.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod suites;

pub use cli::run;
pub use config::{RunConfig, Settings};
pub use error::{CliError, ExitStatus};
pub use report::{Check, SuiteReport};
pub use suites::Suite;
