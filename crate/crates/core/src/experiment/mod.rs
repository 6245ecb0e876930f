//! Reproducible sweeps that write one CSV row per (trial, method, N).
//!
//! Every trial draws from its own random streams keyed by the master seed,
//! the trial index and a stage tag, so trials run in parallel and the output
//! does not depend on the thread count.

mod config;
mod record;
mod runs;

pub use config::{ChannelSource, ExperimentConfig, ExperimentKind, Method, Overrides, TRule};
pub use record::{
    fit_loglog_slope, fit_rows, parse_csv, render_csv, sort_records, wilson_interval, RunRecord, SlopeFit, CSV_HEADER,
};
pub use runs::{
    run, run_compare, run_conditions_probability, run_examples, run_lemma_check, run_scaling, ExperimentOutput,
};

use thiserror::Error;

use crate::beamforming::BeamformingError;
use crate::channel::ChannelError;
use crate::conditions::ConditionError;
use crate::kv::KvError;
use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Kv(#[from] KvError),
    #[error("slope fit: {0}")]
    Fit(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{0}")]
    Io(String),
}

impl ExperimentError {
    /// Bad input rather than a failure during the run.
    pub fn is_config(&self) -> bool {
        match self {
            ExperimentError::Config(_) | ExperimentError::Kv(_) => true,
            ExperimentError::Scenario(ScenarioError::Config(_)) => true,
            ExperimentError::Trial { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
