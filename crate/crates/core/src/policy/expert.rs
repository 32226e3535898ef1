use super::scoring::ScoreBank;
use super::{check_feature_version, ExpertCheckpoint, PolicyError};
use crate::synth::{EngineError, EpisodeRng, ExplorationHistory, ExplorationPolicy, FrontierId};

/// Expands the frontier transition with the highest Q-value, lowest frontier
/// index on ties.
#[derive(Debug, Clone)]
pub struct GreedyExpertPolicy {
    bank: ScoreBank,
    fresh: ScoreBank,
}

impl GreedyExpertPolicy {
    pub fn new(expert: &ExpertCheckpoint) -> Result<Self, PolicyError> {
        check_feature_version(&expert.feature_version)?;
        let bank = ScoreBank::new(vec![expert.network.clone()], None);
        Ok(Self {
            fresh: bank.clone(),
            bank,
        })
    }
}

impl ExplorationPolicy for GreedyExpertPolicy {
    fn select(
        &mut self,
        h: &ExplorationHistory<'_>,
        _: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        if h.steps() == 0 {
            self.bank = self.fresh.clone();
        }
        self.bank.sync(h);
        self.bank
            .best(0)
            .ok_or_else(|| EngineError::Policy("empty frontier".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::at::{build_at, AtParams};
    use crate::policy::{argmax, frontier_q_values, QNetwork};
    use crate::synth::run_episode;
    use rand::SeedableRng;

    struct NaiveGreedy<'e>(&'e ExpertCheckpoint);

    impl ExplorationPolicy for NaiveGreedy<'_> {
        fn select(
            &mut self,
            h: &ExplorationHistory<'_>,
            _: &mut EpisodeRng,
        ) -> Result<FrontierId, EngineError> {
            let q = frontier_q_values(self.0, h);
            Ok(h.frontier_at(argmax(&q)).unwrap())
        }
    }

    #[test]
    fn matches_full_frontier_argmax() {
        for seed in 0..4 {
            let e = ExpertCheckpoint::new(
                QNetwork::init(&mut EpisodeRng::seed_from_u64(seed)),
                1,
                1,
                seed,
                0,
                1,
            );
            let mut fast = GreedyExpertPolicy::new(&e).unwrap();
            for (n, k) in [(1, 1), (2, 2), (3, 2), (3, 3)] {
                let sys = build_at(AtParams::new(n, k).unwrap()).unwrap();
                let a = run_episode(&sys, &mut fast, 2000, 0).unwrap();
                let b = run_episode(&sys, &mut NaiveGreedy(&e), 2000, 0).unwrap();
                assert_eq!(
                    (a.steps, a.verdict_s0, a.solved),
                    (b.steps, b.verdict_s0, b.solved)
                );
                assert_eq!(a.controller, b.controller);
            }
        }
    }

    #[test]
    fn untrained_expert_solves_at_1_1_in_four() {
        let e = ExpertCheckpoint::new(
            QNetwork::init(&mut EpisodeRng::seed_from_u64(9)),
            1,
            1,
            9,
            0,
            1,
        );
        let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
        let r = run_episode(&sys, &mut GreedyExpertPolicy::new(&e).unwrap(), 100, 0).unwrap();
        assert!(r.solved);
        assert_eq!((r.steps, r.return_value), (4, -4));
    }
}
