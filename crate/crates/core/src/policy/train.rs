//! One-step Q-learning over frontier actions with experience replay.

use std::path::Path;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{extract_features, ExpertCheckpoint, Gradient, PolicyError, QNetwork, FEATURE_DIM};
use crate::at::{build_at, AtParams};
use crate::des::DEFAULT_STATE_CAP;
use crate::synth::{oracle_solve, ExplorationHistory, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: u32,
    pub budget: usize,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
    /// Gradient steps between target-network copies.
    pub target_sync: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which epsilon decays linearly.
    pub epsilon_decay: f64,
    pub gamma: f64,
    pub huber_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            budget: 10_000,
            learning_rate: 1e-3,
            replay_capacity: 50_000,
            batch_size: 64,
            warmup: 1000,
            target_sync: 2500,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.3,
            gamma: 1.0,
            huber_delta: 1.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::InvalidConfig(m.to_string()));
        if self.episodes == 0 {
            return bad("episodes must be at least 1");
        }
        if self.budget == 0 {
            return bad("budget must be at least 1");
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.target_sync == 0 {
            return bad("batch size, replay capacity and target sync must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.huber_delta > 0.0) {
            return bad("learning rate and huber delta must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay) || !(0.0..=1.0).contains(&self.gamma) {
            return bad("epsilon decay and gamma must lie in [0, 1]");
        }
        Ok(())
    }

    fn epsilon(&self, episode: u32) -> f64 {
        let span = self.epsilon_decay * self.episodes as f64;
        let frac = if span <= 0.0 {
            1.0
        } else {
            (episode as f64 / span).min(1.0)
        };
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EpisodeMetric {
    pub episode: u32,
    pub steps: usize,
    pub solved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: ExpertCheckpoint,
    pub metrics: Vec<EpisodeMetric>,
}

type Features = [f32; FEATURE_DIM];

struct Replay {
    x: Features,
    /// Frontier after the expansion; empty when the episode ended.
    next: Rc<[Features]>,
    /// Target-network max over `next`, keyed by target version.
    cached: Option<(u32, f64)>,
}

fn widen(x: &Features) -> [f64; FEATURE_DIM] {
    x.map(f64::from)
}

fn max_q(net: &QNetwork, xs: &[Features]) -> f64 {
    xs.iter()
        .map(|x| net.forward(&widen(x)))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn snapshot(h: &ExplorationHistory<'_>) -> Rc<[Features]> {
    h.frontier()
        .map(|ft| extract_features::<f32>(h, ft).0)
        .collect()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new() -> Self {
        let n = QNetwork::<f64>::param_count();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, net: &mut QNetwork, grad: &Gradient<f64>, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((p, g), m), v) in net
            .params_mut()
            .zip(grad.params())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains one expert on `AT(params)`. Deterministic in `seed`.
pub fn train_expert(
    params: AtParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome, PolicyError> {
    cfg.validate()?;
    let sys = build_at(params).map_err(|e| PolicyError::InvalidConfig(e.to_string()))?;
    if let Ok(sol) = oracle_solve(&sys, DEFAULT_STATE_CAP) {
        if sol.initial().0 == Verdict::Losing {
            return Err(PolicyError::Unsolvable {
                n: params.n,
                k: params.k,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut online: QNetwork = QNetwork::init(&mut rng);
    let mut target = online.clone();
    let mut version = 0u32;
    let mut adam = Adam::new();
    let mut replay: Vec<Replay> = Vec::with_capacity(cfg.replay_capacity.min(1 << 16));
    let mut replay_head = 0;
    let mut collected = 0usize;
    let mut updates = 0usize;
    let mut metrics = Vec::with_capacity(cfg.episodes as usize);

    for episode in 0..cfg.episodes {
        let eps = cfg.epsilon(episode);
        let mut h = ExplorationHistory::new(&sys);
        let init = h.initial();
        let mut current = snapshot(&h);
        while !h.verdict(init).is_known() && h.steps() < cfg.budget && !current.is_empty() {
            let idx = if rng.gen::<f64>() < eps {
                rng.gen_range(0..current.len())
            } else {
                let q: Vec<f64> = current.iter().map(|x| online.forward(&widen(x))).collect();
                super::argmax(&q)
            };
            let fid = h.frontier_at(idx).expect("snapshot matches frontier");
            h.expand(fid)?;
            let done = h.verdict(init).is_known() || h.frontier_len() == 0;
            let next: Rc<[Features]> = if done {
                Rc::from(Vec::new())
            } else {
                snapshot(&h)
            };
            let entry = Replay {
                x: current[idx],
                next: Rc::clone(&next),
                cached: None,
            };
            if replay.len() < cfg.replay_capacity {
                replay.push(entry);
            } else {
                replay[replay_head] = entry;
                replay_head = (replay_head + 1) % cfg.replay_capacity;
            }
            collected += 1;
            current = next;

            if collected >= cfg.warmup {
                let mut grad = QNetwork::zeros();
                let scale = 1.0 / cfg.batch_size as f64;
                let floor = -(cfg.budget as f64);
                for _ in 0..cfg.batch_size {
                    let j = rng.gen_range(0..replay.len());
                    let r = &mut replay[j];
                    let future = if r.next.is_empty() {
                        0.0
                    } else {
                        match r.cached {
                            Some((v, m)) if v == version => m,
                            _ => {
                                let m = max_q(&target, &r.next);
                                r.cached = Some((version, m));
                                m
                            }
                        }
                    };
                    let y = (-1.0 + cfg.gamma * future).clamp(floor, 0.0);
                    let x = widen(&r.x);
                    let err = online.forward(&x) - y;
                    let dl = err.clamp(-cfg.huber_delta, cfg.huber_delta);
                    online.accumulate_gradient(&x, dl * scale, &mut grad);
                }
                adam.step(&mut online, &grad, cfg.learning_rate);
                updates += 1;
                if updates.is_multiple_of(cfg.target_sync) {
                    target = online.clone();
                    version += 1;
                }
            }
        }
        if !online.is_finite() {
            return Err(PolicyError::Corrupt(format!(
                "non-finite weights after episode {episode}"
            )));
        }
        metrics.push(EpisodeMetric {
            episode,
            steps: h.steps(),
            solved: h.verdict(init) == Verdict::Winning,
        });
    }

    let checkpoint =
        ExpertCheckpoint::new(online, params.n, params.k, seed, cfg.episodes, cfg.budget);
    Ok(TrainOutcome {
        checkpoint,
        metrics,
    })
}

/// Writes the training series as CSV `episode,steps,solved`.
pub fn write_metrics(path: &Path, metrics: &[EpisodeMetric]) -> Result<(), PolicyError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PolicyError::io(path, e))?;
    for m in metrics {
        w.serialize(m).map_err(|e| PolicyError::io(path, e))?;
    }
    w.flush().map_err(|e| PolicyError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::GreedyExpertPolicy;
    use crate::synth::run_episode;

    fn quick() -> TrainConfig {
        TrainConfig {
            episodes: 12,
            budget: 5000,
            warmup: 100,
            target_sync: 200,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic() {
        let p = AtParams::new(2, 1).unwrap();
        let a = train_expert(p, &quick(), 4).unwrap();
        let b = train_expert(p, &quick(), 4).unwrap();
        assert_eq!(
            a.checkpoint.to_json().unwrap(),
            b.checkpoint.to_json().unwrap()
        );
        assert_eq!(a.metrics, b.metrics);
        let c = train_expert(p, &quick(), 5).unwrap();
        assert_ne!(a.checkpoint.network, c.checkpoint.network);
    }

    #[test]
    fn metrics_account_every_episode() {
        let out = train_expert(AtParams::new(2, 1).unwrap(), &quick(), 0).unwrap();
        assert_eq!(out.metrics.len(), 12);
        assert!(out.metrics.iter().all(|m| m.solved && m.steps > 0));
        assert_eq!(
            (
                out.checkpoint.n,
                out.checkpoint.k,
                out.checkpoint.episodes_trained
            ),
            (2, 1, 12)
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metrics(&path, &out.metrics).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("episode,steps,solved\n0,"));
    }

    #[test]
    fn rejects_degenerate_configs() {
        let p = AtParams::new(1, 1).unwrap();
        for cfg in [
            TrainConfig {
                episodes: 0,
                ..quick()
            },
            TrainConfig {
                budget: 0,
                ..quick()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..quick()
            },
        ] {
            assert!(matches!(
                train_expert(p, &cfg, 0),
                Err(PolicyError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = TrainConfig {
            episodes: 100,
            ..TrainConfig::default()
        };
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(15) - 0.525).abs() < 1e-12);
        assert!((cfg.epsilon(30) - 0.05).abs() < 1e-12);
        assert!((cfg.epsilon(99) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn trained_expert_beats_its_initialization() {
        let p = AtParams::new(2, 1).unwrap();
        let cfg = TrainConfig {
            episodes: 200,
            budget: 5000,
            ..TrainConfig::default()
        };
        let seed = 0;
        let trained = train_expert(p, &cfg, seed).unwrap().checkpoint;
        let init = ExpertCheckpoint::new(
            QNetwork::init(&mut ChaCha8Rng::seed_from_u64(seed)),
            2,
            1,
            seed,
            0,
            5000,
        );
        let sys = build_at(p).unwrap();
        let median = |e: &ExpertCheckpoint| {
            let mut steps: Vec<usize> = (0..25)
                .map(|s| {
                    let mut pol = GreedyExpertPolicy::new(e).unwrap();
                    run_episode(&sys, &mut pol, 5000, s).unwrap().steps
                })
                .collect();
            steps.sort_unstable();
            steps[12]
        };
        let (t, u) = (median(&trained), median(&init));
        assert!(t < u, "trained median {t} vs untrained {u}");
    }
}
