//! Prior-confidence gating over a bank of experts and the mixture episodes it
//! drives.

mod dataset;
mod gating;
mod mixture;
mod select;

use thiserror::Error;

pub use dataset::{HistoryDataset, HistoryRecord};
pub use gating::{
    estimate_step_cost, gating_log_json, gating_weights, kernel_weight, prior_strengths,
    ExpertSignals, GatingWeights,
};
pub use mixture::{
    compute_gate, mix_distributions, run_moe_episode, Expert, ExpertBank, MixMode, MixtureConfig,
    MixturePolicy, MoeOutcome, ReferenceMixturePolicy,
};
pub use select::{select_mixture, selection_csv, ExpertCoverage, InstanceKey, SelectionRound};

use crate::policy::PolicyError;
use crate::synth::EngineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoeError {
    #[error("unknown expert {0:?}")]
    UnknownExpert(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed history dataset: {0}")]
    Dataset(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl MoeError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        MoeError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
