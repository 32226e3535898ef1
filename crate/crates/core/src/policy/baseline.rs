//! Uninformed exploration orders used as reference points.

use rand::Rng;

use crate::synth::{EngineError, EpisodeRng, ExplorationHistory, ExplorationPolicy, FrontierId};

/// Uniformly random frontier transition.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

/// Oldest frontier transition first.
#[derive(Debug, Clone, Copy, Default)]
pub struct BfsPolicy;

/// Newest frontier transition first.
#[derive(Debug, Clone, Copy, Default)]
pub struct DfsPolicy;

fn empty() -> EngineError {
    EngineError::Policy("empty frontier".into())
}

impl ExplorationPolicy for RandomPolicy {
    fn select(
        &mut self,
        h: &ExplorationHistory<'_>,
        rng: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        if h.frontier_len() == 0 {
            return Err(empty());
        }
        let k = rng.gen_range(0..h.frontier_len());
        h.frontier_at(k).ok_or_else(empty)
    }
}

impl ExplorationPolicy for BfsPolicy {
    fn select(
        &mut self,
        h: &ExplorationHistory<'_>,
        _: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        h.frontier_at(0).ok_or_else(empty)
    }
}

impl ExplorationPolicy for DfsPolicy {
    fn select(
        &mut self,
        h: &ExplorationHistory<'_>,
        _: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        h.frontier_len()
            .checked_sub(1)
            .and_then(|k| h.frontier_at(k))
            .ok_or_else(empty)
    }
}
