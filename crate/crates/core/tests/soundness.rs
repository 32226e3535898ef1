use dcs_moe::at::{build_at, AtParams};
use dcs_moe::des::{ComponentAutomaton, CompositeSystem, EventLabel, DEFAULT_STATE_CAP};
use dcs_moe::synth::{oracle_solve, ExplorationHistory, Verdict};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random system: 1-3 components of 1-4 states over up to 5 labels,
/// shared labels synchronising.
fn random_system(seed: u64) -> CompositeSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label_count = rng.gen_range(1..=5u32);
    let alphabet: Vec<EventLabel> = (0..label_count)
        .map(|id| EventLabel::new(id, format!("e{id}"), rng.gen_bool(0.5)))
        .collect();
    let comp_count = rng.gen_range(1..=3usize);
    let mut locals: Vec<Vec<u32>> = vec![Vec::new(); comp_count];
    for l in 0..label_count {
        locals[rng.gen_range(0..comp_count)].push(l);
        for local in locals.iter_mut() {
            if rng.gen_bool(0.3) && !local.contains(&l) {
                local.push(l);
            }
        }
    }
    let components = locals
        .into_iter()
        .enumerate()
        .map(|(c, local)| {
            let states = rng.gen_range(1..=4u32);
            let marked: Vec<u32> = (0..states).filter(|_| rng.gen_bool(0.3)).collect();
            let mut edges = Vec::new();
            for s in 0..states {
                for &l in &local {
                    if rng.gen_bool(0.6) {
                        edges.push((s, l, rng.gen_range(0..states)));
                    }
                }
            }
            ComponentAutomaton::new(c, states, 0, marked, local, edges).expect("valid component")
        })
        .collect();
    CompositeSystem::new(alphabet, components).expect("valid system")
}

/// Expands in a random order until the frontier is exhausted, checking every
/// issued verdict against the oracle after each step.
fn check_against_oracle(sys: &CompositeSystem, order_seed: u64) -> Result<(), TestCaseError> {
    let oracle = oracle_solve(sys, DEFAULT_STATE_CAP).expect("small system");
    let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
    let mut h = ExplorationHistory::new(sys);
    let mut checked = 0;
    loop {
        for &(id, v) in &h.verdict_log()[checked..] {
            let expected = oracle.get(h.state(id)).expect("reachable").0;
            prop_assert_eq!(v, expected, "state {:?}", h.state(id));
        }
        checked = h.verdict_log().len();
        if h.frontier_len() == 0 {
            break;
        }
        let pick = h
            .frontier_at(rng.gen_range(0..h.frontier_len()))
            .expect("in range");
        h.expand(pick).expect("frontier entry");
    }
    prop_assert_eq!(h.verdict(h.initial()), oracle.initial().0);
    for &id in h.discovered_states() {
        prop_assert_eq!(h.verdict(id), oracle.get(h.state(id)).expect("reachable").0);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_systems_agree_with_oracle(sys_seed in any::<u64>(), order_seed in any::<u64>()) {
        check_against_oracle(&random_system(sys_seed), order_seed)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn at_instances_agree_with_oracle(n in 1u32..=2, k in 1u32..=3, order_seed in any::<u64>()) {
        check_against_oracle(&build_at(AtParams::new(n, k).unwrap()).unwrap(), order_seed)?;
    }
}

#[test]
fn random_systems_cover_all_verdicts() {
    let mut seen = [false; 2];
    for seed in 0..200 {
        let sys = random_system(seed);
        match oracle_solve(&sys, DEFAULT_STATE_CAP).unwrap().initial().0 {
            Verdict::Winning => seen[0] = true,
            Verdict::Losing => seen[1] = true,
            Verdict::Unknown => panic!("oracle left the initial state unknown"),
        }
    }
    assert_eq!(seen, [true, true]);
}
