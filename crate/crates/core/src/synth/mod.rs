//! On-the-fly exploration with sound winning/losing propagation, controller
//! extraction and verification, and a monolithic oracle.

mod controller;
mod frontier;
mod history;
mod oracle;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use controller::{
    extract_controller, verify_controller, Controller, VerificationReport, Violation, ViolationKind,
};
pub use history::{ExplorationHistory, FrontierId, FrontierTransition, StateId, Verdict};
pub use oracle::{oracle_solve, OracleSolution};

use crate::des::CompositeSystem;

/// Random source handed to policies; seeded per episode.
pub type EpisodeRng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("transition {0} is not in the frontier")]
    NotInFrontier(FrontierId),
    #[error("initial state is not winning ({0:?})")]
    InitialNotWinning(Verdict),
    #[error("policy failure: {0}")]
    Policy(String),
    #[error("budget must be positive")]
    ZeroBudget,
}

/// Chooses the next frontier transition to expand. Called only while the
/// frontier is non-empty and the initial state is unclassified.
pub trait ExplorationPolicy {
    fn select(
        &mut self,
        history: &ExplorationHistory<'_>,
        rng: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError>;
}

impl<P: ExplorationPolicy + ?Sized> ExplorationPolicy for &mut P {
    fn select(
        &mut self,
        history: &ExplorationHistory<'_>,
        rng: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        (**self).select(history, rng)
    }
}

impl<P: ExplorationPolicy + ?Sized> ExplorationPolicy for Box<P> {
    fn select(
        &mut self,
        history: &ExplorationHistory<'_>,
        rng: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        (**self).select(history, rng)
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// Initial state Winning and the extracted controller verified.
    pub solved: bool,
    pub verdict_s0: Verdict,
    pub steps: usize,
    /// Episode return: -1 per expansion.
    pub return_value: i64,
    pub wall_time: Duration,
    pub controller: Option<Controller>,
    pub verification: Option<VerificationReport>,
}

/// Expands frontier transitions chosen by `policy` until the initial state is
/// classified, the budget is spent, or the frontier is exhausted.
pub fn run_episode(
    sys: &CompositeSystem,
    policy: &mut dyn ExplorationPolicy,
    budget: usize,
    seed: u64,
) -> Result<SynthesisResult, EngineError> {
    if budget == 0 {
        return Err(EngineError::ZeroBudget);
    }
    let start = Instant::now();
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let mut h = ExplorationHistory::new(sys);
    let init = h.initial();
    while !h.verdict(init).is_known() && h.steps() < budget && h.frontier_len() > 0 {
        let choice = policy.select(&h, &mut rng)?;
        h.expand(choice)?;
    }
    Ok(finish(&h, start))
}

/// Builds the episode result from a finished history.
pub(crate) fn finish(h: &ExplorationHistory<'_>, start: Instant) -> SynthesisResult {
    let verdict_s0 = h.verdict(h.initial());
    let (controller, verification) = if verdict_s0 == Verdict::Winning {
        let c = extract_controller(h).expect("initial state is winning");
        let report = verify_controller(h.system(), &c);
        (Some(c), Some(report))
    } else {
        (None, None)
    };
    let steps = h.steps();
    SynthesisResult {
        solved: verification.as_ref().is_some_and(|r| r.ok),
        verdict_s0,
        steps,
        return_value: -(steps as i64),
        wall_time: start.elapsed(),
        controller,
        verification,
    }
}

#[cfg(test)]
pub(crate) mod tests;
