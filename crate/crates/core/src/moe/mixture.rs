use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    estimate_step_cost, gating_weights, prior_strengths, ExpertSignals, GatingWeights,
    HistoryDataset, MoeError,
};
use crate::at::{build_at, AtParams};
use crate::policy::scoring::ScoreBank;
use crate::policy::{action_distribution, argmax, check_feature_version, ExpertCheckpoint};
use crate::synth::{
    run_episode, EngineError, EpisodeRng, ExplorationHistory, ExplorationPolicy, FrontierId,
    SynthesisResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixMode {
    Soft,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    pub experts: Vec<String>,
    pub mode: MixMode,
    pub beta: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub sigma_n: f64,
    pub sigma_k: f64,
    pub epsilon: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            experts: Vec::new(),
            mode: MixMode::Soft,
            beta: 1.0,
            gamma: 1.0,
            temperature: 2.0,
            sigma_n: 1.0,
            sigma_k: 1.0,
            epsilon: 1e-8,
        }
    }
}

impl MixtureConfig {
    pub fn new(experts: Vec<String>, mode: MixMode) -> Self {
        Self {
            experts,
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MoeError> {
        let bad = |m: &str| Err(MoeError::InvalidConfig(m.to_string()));
        if self.experts.is_empty() {
            return bad("a mixture needs at least one expert");
        }
        if !(self.temperature > 0.0) || !(self.sigma_n > 0.0) || !(self.sigma_k > 0.0) {
            return bad("temperature and bandwidths must be positive");
        }
        if !(self.beta >= 0.0) || !(self.gamma >= 0.0) || !(self.epsilon >= 0.0) {
            return bad("beta, gamma and epsilon must be non-negative");
        }
        Ok(())
    }
}

/// A checkpoint together with its profiling history.
#[derive(Debug, Clone)]
pub struct Expert {
    pub id: String,
    pub checkpoint: ExpertCheckpoint,
    pub history: HistoryDataset,
}

/// Experts addressable by id.
#[derive(Debug, Clone, Default)]
pub struct ExpertBank {
    experts: BTreeMap<String, Expert>,
}

impl ExpertBank {
    pub fn new(experts: impl IntoIterator<Item = Expert>) -> Self {
        Self {
            experts: experts.into_iter().map(|e| (e.id.clone(), e)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&Expert> {
        self.experts.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.experts.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn resolve(&self, ids: &[String]) -> Result<Vec<&Expert>, MoeError> {
        ids.iter()
            .map(|id| {
                self.get(id)
                    .ok_or_else(|| MoeError::UnknownExpert(id.clone()))
            })
            .collect()
    }
}

/// Gate for the episode starting at `h0`: prior strength at `params` plus each
/// expert's confidence over the initial frontier. An empty initial frontier
/// reads as entropy 0 and margin 1.
pub fn compute_gate(
    experts: &[&Expert],
    params: AtParams,
    h0: &ExplorationHistory<'_>,
    cfg: &MixtureConfig,
) -> Result<GatingWeights, MoeError> {
    let s_hats: Vec<f64> = experts
        .iter()
        .map(|e| estimate_step_cost(&e.history, params, cfg.sigma_n, cfg.sigma_k, cfg.epsilon))
        .collect();
    let a = prior_strengths(&s_hats, cfg.epsilon);
    let mut signals = Vec::with_capacity(experts.len());
    for (e, &a) in experts.iter().zip(&a) {
        check_feature_version(&e.checkpoint.feature_version)?;
        let (entropy, margin) = if h0.frontier_len() == 0 {
            (0.0, 1.0)
        } else {
            let c = action_distribution(&e.checkpoint, h0, cfg.temperature)?.confidence();
            (c.entropy, c.margin)
        };
        signals.push(ExpertSignals { a, entropy, margin });
    }
    Ok(gating_weights(&signals, cfg.beta, cfg.gamma))
}

/// Greedy selection from the fixed-weight mixture, maintained incrementally.
#[derive(Debug, Clone)]
pub struct MixturePolicy {
    gate: GatingWeights,
    mode: MixMode,
    bank: ScoreBank,
    fresh: ScoreBank,
}

impl MixturePolicy {
    pub fn new(
        experts: &[&Expert],
        gate: GatingWeights,
        cfg: &MixtureConfig,
    ) -> Result<Self, MoeError> {
        if experts.is_empty() || experts.len() != gate.g.len() {
            return Err(MoeError::InvalidConfig(
                "gate and expert list differ in length".into(),
            ));
        }
        for e in experts {
            check_feature_version(&e.checkpoint.feature_version)?;
        }
        let bank = match cfg.mode {
            MixMode::Soft => ScoreBank::new(
                experts
                    .iter()
                    .map(|e| e.checkpoint.network.clone())
                    .collect(),
                Some(cfg.temperature),
            ),
            MixMode::Hard => {
                ScoreBank::new(vec![experts[gate.top()].checkpoint.network.clone()], None)
            }
        };
        Ok(Self {
            gate,
            mode: cfg.mode,
            fresh: bank.clone(),
            bank,
        })
    }

    pub fn gate(&self) -> &GatingWeights {
        &self.gate
    }
}

impl ExplorationPolicy for MixturePolicy {
    fn select(
        &mut self,
        h: &ExplorationHistory<'_>,
        _: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        if h.steps() == 0 {
            self.bank = self.fresh.clone();
        }
        self.bank.sync(h);
        let choice = match self.mode {
            MixMode::Soft => self.bank.best_mixed(&self.gate.g),
            MixMode::Hard => self.bank.best(0),
        };
        choice.ok_or_else(|| EngineError::Policy("empty frontier".into()))
    }
}

/// `sum_i g_i P_i`, accumulated in expert order.
pub fn mix_distributions(g: &[f64], dists: &[Vec<f64>]) -> Vec<f64> {
    let mut mixed = vec![0.0; dists.first().map_or(0, Vec::len)];
    for (&gi, p) in g.iter().zip(dists) {
        for (m, &pi) in mixed.iter_mut().zip(p) {
            *m += gi * pi;
        }
    }
    mixed
}

/// Straightforward mixture: every step recomputes each expert's full action
/// distribution and mixes them.
#[derive(Debug, Clone)]
pub struct ReferenceMixturePolicy {
    experts: Vec<ExpertCheckpoint>,
    gate: GatingWeights,
    mode: MixMode,
    temperature: f64,
}

impl ReferenceMixturePolicy {
    pub fn new(experts: &[&Expert], gate: GatingWeights, cfg: &MixtureConfig) -> Self {
        Self {
            experts: experts.iter().map(|e| e.checkpoint.clone()).collect(),
            gate,
            mode: cfg.mode,
            temperature: cfg.temperature,
        }
    }

    /// Mixed distribution over the current frontier.
    pub fn mixed(&self, h: &ExplorationHistory<'_>) -> Result<Vec<f64>, EngineError> {
        let dist = |e: &ExpertCheckpoint| {
            action_distribution(e, h, self.temperature)
                .map_err(|err| EngineError::Policy(err.to_string()))
        };
        match self.mode {
            MixMode::Hard => Ok(dist(&self.experts[self.gate.top()])?.probabilities),
            MixMode::Soft => {
                let dists = self
                    .experts
                    .iter()
                    .map(|e| Ok(dist(e)?.probabilities))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(mix_distributions(&self.gate.g, &dists))
            }
        }
    }
}

impl ExplorationPolicy for ReferenceMixturePolicy {
    fn select(
        &mut self,
        h: &ExplorationHistory<'_>,
        _: &mut EpisodeRng,
    ) -> Result<FrontierId, EngineError> {
        let mixed = self.mixed(h)?;
        h.frontier_at(argmax(&mixed))
            .ok_or_else(|| EngineError::Policy("empty frontier".into()))
    }
}

#[derive(Debug, Clone)]
pub struct MoeOutcome {
    pub result: SynthesisResult,
    pub gate: GatingWeights,
}

/// Gates once at the initial state, then explores `AT(params)` with the
/// mixture. The reported wall time includes gating.
pub fn run_moe_episode(
    params: AtParams,
    experts: &[&Expert],
    cfg: &MixtureConfig,
    budget: usize,
    seed: u64,
) -> Result<MoeOutcome, MoeError> {
    cfg.validate()?;
    if experts.len() != cfg.experts.len() {
        return Err(MoeError::InvalidConfig(
            "expert list does not match the configuration".into(),
        ));
    }
    let start = Instant::now();
    let sys = build_at(params).map_err(|e| MoeError::InvalidConfig(e.to_string()))?;
    let gate = compute_gate(experts, params, &ExplorationHistory::new(&sys), cfg)?;
    let mut policy = MixturePolicy::new(experts, gate, cfg)?;
    let gating_time = start.elapsed();
    let mut result = run_episode(&sys, &mut policy, budget, seed)?;
    result.wall_time += gating_time;
    Ok(MoeOutcome {
        result,
        gate: policy.gate.clone(),
    })
}
