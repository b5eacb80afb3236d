//! Experiment driver for sweeps over spectral truncations.

pub mod config;
pub mod sweep;
pub mod tools;

use thiserror::Error;

pub use config::{parse_sweep, ExperimentConfig, VariantSpec};
pub use sweep::{run_level, run_sweep, LevelAudit, Status, SweepOutcome, CSV_HEADER};
pub use tools::{duality_corpus, kernel_report, one_off_distance, Side};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(ucp_trunc::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ucp_trunc::Error> for CliError {
    fn from(e: ucp_trunc::Error) -> Self {
        use ucp_trunc::Error as E;
        match e {
            E::InvalidArgument(_) | E::NotSummable(_) | E::DimensionMismatch(_) | E::Serde(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}
