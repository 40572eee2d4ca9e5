use std::io;
use std::path::Path;

use lpf_core::experiments::ExperimentError;
use lpf_core::models::ModelError;
use lpf_core::{FilterError, LatticeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Config(_) => "config",
            Self::Lattice(LatticeError::UnsupportedSampleCount { .. })
            | Self::Filter(FilterError::Lattice(LatticeError::UnsupportedSampleCount { .. })) => "invalid_n",
            Self::Lattice(_) => "lattice",
            Self::Filter(FilterError::DegenerateWeights { .. }) => "lost_track",
            Self::Filter(_) => "filter",
            Self::Experiment(_) => "experiment",
            Self::Model(_) => "model",
            Self::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// `error: kind=<kind> message=<text>` on one line.
pub fn error_line(kind: &str, message: &str) -> String {
    let flat: Vec<&str> = message.split_whitespace().collect();
    format!("error: kind={kind} message={}", flat.join(" "))
}
