//! Randomized invariant trials shared by the property tests and the
//! acceptance run. Each trial is a pure function of its seed.

#![allow(dead_code)]

use dcs_moe::at::{build_at, AtParams};
use dcs_moe::des::CompositeSystem;
use dcs_moe::moe::{
    gating_weights, kernel_weight, prior_strengths, Expert, ExpertSignals, GatingWeights,
    HistoryDataset, MixMode, MixtureConfig, MixturePolicy, ReferenceMixturePolicy,
};
use dcs_moe::policy::{ExpertCheckpoint, QNetwork};
use dcs_moe::synth::{EpisodeRng, ExplorationHistory, ExplorationPolicy, FrontierId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const TOL: f64 = 1e-9;

pub type Trial = fn(u64) -> Result<(), String>;

pub const GATING_TRIALS: [(&str, Trial); 6] = [
    ("normalization", normalization),
    ("permutation equivariance", permutation),
    ("monotonicity", monotonicity),
    ("temporal fixity", temporal_fixity),
    ("soft to hard limit", soft_hard_limit),
    ("kernel", kernel),
];

pub fn random_expert(id: &str, seed: u64) -> Expert {
    let net = QNetwork::init(&mut EpisodeRng::seed_from_u64(seed));
    Expert {
        id: id.to_string(),
        checkpoint: ExpertCheckpoint::new(net, 2, 1, seed, 0, 1),
        history: HistoryDataset::from_runs(id, []),
    }
}

/// Expansion order chosen by `policy` until the initial state is classified
/// or `budget` steps are spent.
pub fn expansion_sequence(
    sys: &CompositeSystem,
    policy: &mut dyn ExplorationPolicy,
    budget: usize,
) -> Vec<FrontierId> {
    let mut rng = EpisodeRng::seed_from_u64(0);
    let mut h = ExplorationHistory::new(sys);
    while !h.verdict(h.initial()).is_known() && h.steps() < budget && h.frontier_len() > 0 {
        let choice = policy.select(&h, &mut rng).expect("frontier is non-empty");
        h.expand(choice).expect("policy picks from the frontier");
    }
    h.expansions().to_vec()
}

fn random_signals(rng: &mut EpisodeRng, m: usize) -> Vec<ExpertSignals> {
    (0..m)
        .map(|_| ExpertSignals {
            a: rng.gen_range(-4.0..4.0),
            entropy: rng.gen_range(0.0..5.0),
            margin: rng.gen_range(0.0..1.0),
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn small_instance(rng: &mut EpisodeRng) -> AtParams {
    AtParams::new(rng.gen_range(1..=3), rng.gen_range(1..=3)).expect("positive")
}

/// Weights are a probability vector, including when some experts have no
/// usable history.
pub fn normalization(seed: u64) -> Result<(), String> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let m = rng.gen_range(1..=8);
    let s_hats: Vec<f64> = (0..m)
        .map(|_| {
            if rng.gen_bool(0.2) {
                f64::INFINITY
            } else {
                rng.gen_range(1.0..5000.0)
            }
        })
        .collect();
    let a = prior_strengths(&s_hats, 1e-8);
    let mut signals = random_signals(&mut rng, m);
    for (s, a) in signals.iter_mut().zip(a) {
        s.a = a;
    }
    let w = gating_weights(&signals, rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
    let sum: f64 = w.g.iter().sum();
    if !close(sum, 1.0) || w.g.iter().any(|&g| !(g > 0.0 && g <= 1.0)) {
        return Err(format!("g = {:?} sums to {sum}", w.g));
    }
    Ok(())
}

/// Permuting the experts permutes the weights and leaves the mixed
/// distribution over frontier actions unchanged.
pub fn permutation(seed: u64) -> Result<(), String> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let m = rng.gen_range(2..=4);
    let signals = random_signals(&mut rng, m);
    let (beta, gamma) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng);
    let permuted: Vec<ExpertSignals> = perm.iter().map(|&i| signals[i]).collect();
    let w = gating_weights(&signals, beta, gamma);
    let wp = gating_weights(&permuted, beta, gamma);
    for (j, &i) in perm.iter().enumerate() {
        if !close(wp.g[j], w.g[i]) {
            return Err(format!("g[{i}] = {} moved to {j} as {}", w.g[i], wp.g[j]));
        }
    }

    let experts: Vec<Expert> = (0..m)
        .map(|i| random_expert(&format!("e{i}"), rng.gen()))
        .collect();
    let refs: Vec<&Expert> = experts.iter().collect();
    let prefs: Vec<&Expert> = perm.iter().map(|&i| &experts[i]).collect();
    let cfg = MixtureConfig::new(refs.iter().map(|e| e.id.clone()).collect(), MixMode::Soft);
    let mixed = ReferenceMixturePolicy::new(&refs, w, &cfg);
    let mixed_p = ReferenceMixturePolicy::new(&prefs, wp, &cfg);

    let sys = build_at(small_instance(&mut rng)).expect("valid instance");
    let mut h = ExplorationHistory::new(&sys);
    for _ in 0..rng.gen_range(0..20) {
        if h.frontier_len() == 0 {
            break;
        }
        let pick = h
            .frontier_at(rng.gen_range(0..h.frontier_len()))
            .expect("in range");
        h.expand(pick).expect("frontier entry");
    }
    if h.frontier_len() == 0 {
        return Ok(());
    }
    let (a, b) = (
        mixed.mixed(&h).map_err(|e| e.to_string())?,
        mixed_p.mixed(&h).map_err(|e| e.to_string())?,
    );
    match a.iter().zip(&b).find(|(x, y)| !close(**x, **y)) {
        Some((x, y)) => Err(format!("mixed probability {x} became {y}")),
        None => Ok(()),
    }
}

/// Raising a or M never lowers the expert's weight; raising H never raises it.
pub fn monotonicity(seed: u64) -> Result<(), String> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let m = rng.gen_range(1..=6);
    let signals = random_signals(&mut rng, m);
    let (beta, gamma) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
    let i = rng.gen_range(0..m);
    let delta = rng.gen_range(1e-3..3.0);
    let base = gating_weights(&signals, beta, gamma).g[i];
    let bumped = |f: &dyn Fn(&mut ExpertSignals)| {
        let mut s = signals.clone();
        f(&mut s[i]);
        gating_weights(&s, beta, gamma).g[i]
    };
    let up_a = bumped(&|s| s.a += delta);
    let up_h = bumped(&|s| s.entropy += delta);
    let up_m = bumped(&|s| s.margin += delta);
    if up_a < base - TOL || up_h > base + TOL || up_m < base - TOL {
        return Err(format!("g = {base}; +a {up_a}, +H {up_h}, +M {up_m}"));
    }
    Ok(())
}

fn gate_bits(w: &GatingWeights) -> Vec<u64> {
    w.g.iter().chain(&w.logits).map(|x| x.to_bits()).collect()
}

/// The gate recorded before the first step is bit-identical at every later
/// step.
pub fn temporal_fixity(seed: u64) -> Result<(), String> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let m = rng.gen_range(1..=3);
    let experts: Vec<Expert> = (0..m)
        .map(|i| random_expert(&format!("e{i}"), rng.gen()))
        .collect();
    let refs: Vec<&Expert> = experts.iter().collect();
    let gate = gating_weights(&random_signals(&mut rng, m), 1.0, 1.0);
    let recorded = gate_bits(&gate);
    let mode = if rng.gen_bool(0.5) {
        MixMode::Soft
    } else {
        MixMode::Hard
    };
    let cfg = MixtureConfig::new(refs.iter().map(|e| e.id.clone()).collect(), mode);
    let mut policy = MixturePolicy::new(&refs, gate, &cfg).map_err(|e| e.to_string())?;
    let sys = build_at(small_instance(&mut rng)).expect("valid instance");
    let mut erng = EpisodeRng::seed_from_u64(seed);
    let mut h = ExplorationHistory::new(&sys);
    while !h.verdict(h.initial()).is_known() && h.frontier_len() > 0 && h.steps() < 2000 {
        let pick = policy.select(&h, &mut erng).map_err(|e| e.to_string())?;
        h.expand(pick).map_err(|e| e.to_string())?;
        if gate_bits(policy.gate()) != recorded {
            return Err(format!("gate changed at step {}", h.steps()));
        }
    }
    Ok(())
}

/// With a = (10, -10, ...) the soft mixture expands exactly what the hard
/// mixture (expert 0 alone) expands.
pub fn soft_hard_limit(seed: u64) -> Result<(), String> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let m = rng.gen_range(2..=3);
    let experts: Vec<Expert> = (0..m)
        .map(|i| random_expert(&format!("e{i}"), rng.gen()))
        .collect();
    let refs: Vec<&Expert> = experts.iter().collect();
    let signals: Vec<ExpertSignals> = (0..m)
        .map(|i| ExpertSignals {
            a: if i == 0 { 10.0 } else { -10.0 },
            entropy: 0.0,
            margin: 0.0,
        })
        .collect();
    let gate = gating_weights(&signals, 1.0, 1.0);
    let ids: Vec<String> = refs.iter().map(|e| e.id.clone()).collect();
    let sys = build_at(small_instance(&mut rng)).expect("valid instance");
    let run = |mode| {
        let cfg = MixtureConfig::new(ids.clone(), mode);
        let mut p = MixturePolicy::new(&refs, gate.clone(), &cfg).expect("valid mixture");
        expansion_sequence(&sys, &mut p, 2000)
    };
    let (soft, hard) = (run(MixMode::Soft), run(MixMode::Hard));
    if soft != hard {
        let at = soft
            .iter()
            .zip(&hard)
            .position(|(a, b)| a != b)
            .unwrap_or(soft.len().min(hard.len()));
        return Err(format!("sequences diverge at step {at}"));
    }
    Ok(())
}

/// Weight 1 at zero distance, strictly decreasing in each squared distance.
pub fn kernel(seed: u64) -> Result<(), String> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let q = AtParams::new(rng.gen_range(1..=15), rng.gen_range(1..=15)).expect("positive");
    let (sn, sk) = (rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0));
    if !close(kernel_weight(q.n, q.k, q, sn, sk), 1.0) {
        return Err("weight at zero distance differs from 1".into());
    }
    let (dn, dk) = (rng.gen_range(0..6u32), rng.gen_range(0..6u32));
    let w = kernel_weight::<f64>(q.n + dn, q.k + dk, q, sn, sk);
    let further_n = kernel_weight::<f64>(q.n + dn + 1, q.k + dk, q, sn, sk);
    let further_k = kernel_weight::<f64>(q.n + dn, q.k + dk + 1, q, sn, sk);
    if !(further_n < w && further_k < w) && w > 0.0 {
        return Err(format!(
            "w = {w}, further in n {further_n}, further in k {further_k}"
        ));
    }
    Ok(())
}
