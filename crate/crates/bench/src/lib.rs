//! Monte Carlo harness for the fast-splitting schemes: experiment runner,
//! analytic-vs-empirical comparison, and rate-plot data.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod rates;

use thiserror::Error;

pub use compare::{compare_analytic, AnalyticReport};
pub use config::{Decoder, ExperimentConfig, OutputFormat};
pub use experiment::{run_experiment, ExperimentResult, Summary, TrialRecord};
pub use rates::{emit_rate_point, RatePoint};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Params(#[from] splitgt_core::ParamError),
    #[error(transparent)]
    Design(#[from] splitgt_core::design::DesignError),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("{0} is not available for the matrix baselines")]
    Unsupported(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
