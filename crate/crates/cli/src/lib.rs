//! Batch verification harness for `hwkern`.
//!
//! [`parse_config`] turns command-line flags (and an optional JSON file) into a
//! [`SuiteConfig`], [`run_suite`] executes the selected checks, and
//! [`write_report`] emits the result as JSON or CSV. The report layout is
//! described in `docs/report-schema.md`.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{parse_config, Format, Suite, SuiteConfig};
pub use report::{write_report, Check, Comparator, Provenance, Status, SuiteReport, SCHEMA_VERSION};
pub use suites::run_suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown flag or value: {0}")]
    UnknownFlag(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed config file {path}: {reason}")]
    MalformedFile { path: String, reason: String },
    #[error("cannot write output {path}: {reason}")]
    OutputUnwritable { path: String, reason: String },
    /// `--help` or `--version`; the payload is the text to print.
    #[error("{0}")]
    Help(String),
    #[error(transparent)]
    Core(#[from] hwkern::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
