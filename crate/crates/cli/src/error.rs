use std::path::Path;

use thiserror::Error;

use fairrank_core::audit::AuditError;
use fairrank_core::dataset::DatasetError;
use fairrank_core::metrics::MetricsError;
use fairrank_core::ranker::RankError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub(crate) fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("writing {}: {e}", path.display()))
    }

    pub(crate) fn read(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("reading {}: {e}", path.display()))
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidSplitConfig(_) | DatasetError::InvalidSynthetic(_) => CliError::Config(e.to_string()),
            DatasetError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::InvalidK | RankError::InvalidGrid(_) | RankError::InvalidThreshold(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::InvalidK { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Settings(_) => CliError::Config(e.to_string()),
            AuditError::Metrics(m) => m.into(),
            AuditError::Stats(_) => CliError::Data(e.to_string()),
        }
    }
}
