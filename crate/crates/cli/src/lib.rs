//! Command implementations behind the `fairrank` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{AuditConfig, Format, Overrides};
pub use error::CliError;
pub use report::AuditReport;
