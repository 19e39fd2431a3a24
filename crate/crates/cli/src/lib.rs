//! Experiment orchestration for the SMiRL demand-response agent: configuration,
//! single runs, α sweeps, SVG figures and a reference-value printer.

pub mod config;
pub mod oracle;
pub mod plot;
pub mod runner;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig};
pub use runner::{run, RunSummary, RunTrace};
pub use sweep::{sweep, SweepReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    ConfigFile(#[from] ConfigError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training aborted (seed {seed}, alpha {alpha}): {reason}")]
    Abort { seed: u64, alpha: f64, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 1 configuration, 2 training abort, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigFile(_) | Self::Config(_) => 1,
            Self::Abort { .. } => 2,
            Self::Io { .. } | Self::Data(_) => 3,
        }
    }
}
