//! Grid evaluation, profiling, reports and heatmaps.

mod grid;
mod heatmap;
mod report;
mod spec;

use thiserror::Error;

pub use grid::{
    eval_grid, load_bank, parse_results, profile_experts, read_results, results_csv, run_instance,
    run_spec, sha256_file, strip_timing, write_manifest, EvalGridConfig, GateParams, GridOutput,
    InstanceResult, ManifestEntry, ProfileOutput, RunManifest, MANIFEST_NAME, RESULTS_HEADER,
    RESULTS_NAME,
};
pub use heatmap::{cell_values, emit_heatmap, HeatmapMetric};
pub use report::{coverage_from_results, selection_report, timing_report, timing_rows, TimingRow};
pub use spec::PolicySpec;

use crate::moe::MoeError;
use crate::policy::PolicyError;
use crate::synth::EngineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no policies")]
    NoPolicies,
    #[error("invalid policy {0:?}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no checkpoint for expert {0:?}")]
    MissingExpert(String),
    #[error("no results for policy {0:?}")]
    UnknownPolicy(String),
    #[error("malformed results: {0}")]
    Csv(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Moe(#[from] MoeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl EvalError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        EvalError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
