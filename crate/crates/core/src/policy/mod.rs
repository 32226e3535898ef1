//! Exploration policies: baselines, transition features, the Q-network
//! experts, their action distributions, and training.

mod baseline;
mod checkpoint;
mod distribution;
mod expert;
mod features;
mod network;
pub(crate) mod scoring;
mod train;

use thiserror::Error;

pub use baseline::{BfsPolicy, DfsPolicy, RandomPolicy};
pub use checkpoint::{load_checkpoint, save_checkpoint, ExpertCheckpoint};
pub use distribution::{
    action_distribution, argmax, confidence, frontier_q_values, softmax, ActionDistribution,
    Confidence,
};
pub use expert::GreedyExpertPolicy;
pub use features::{
    check_feature_version, extract_features, frontier_features, FeatureVector, FEATURE_DIM,
    FEATURE_VERSION,
};
pub use network::{Gradient, QNetwork, DIMS, HIDDEN};
pub use train::{train_expert, write_metrics, EpisodeMetric, TrainConfig, TrainOutcome};

use crate::synth::EngineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("feature version mismatch: checkpoint has {found:?}, featurizer is {expected:?}")]
    FeatureVersion {
        found: String,
        expected: &'static str,
    },
    #[error("empty frontier")]
    EmptyFrontier,
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training instance AT({n},{k}) is unsolvable: initial state is losing")]
    Unsolvable { n: u32, k: u32 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl PolicyError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        PolicyError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
