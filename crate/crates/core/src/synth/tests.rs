use super::*;
use crate::at::{at_state, build_at, AtParams, MonitorState, PlaneState};
use crate::des::{
    ComponentAutomaton, CompositeState, CompositeSystem, EventLabel, DEFAULT_STATE_CAP,
};
use crate::policy::{BfsPolicy, DfsPolicy, RandomPolicy};

/// Single-component system; labels are `(name, controllable)` and transitions
/// reference them by position.
pub(crate) fn single(
    state_count: u32,
    marked: &[u32],
    labels: &[(&str, bool)],
    transitions: &[(u32, u32, u32)],
) -> CompositeSystem {
    let alphabet: Vec<_> = labels
        .iter()
        .enumerate()
        .map(|(i, (n, c))| EventLabel::new(i as u32, *n, *c))
        .collect();
    let comp = ComponentAutomaton::new(
        0,
        state_count,
        0,
        marked.iter().copied(),
        0..labels.len() as u32,
        transitions.iter().copied(),
    )
    .unwrap();
    CompositeSystem::new(alphabet, vec![comp]).unwrap()
}

fn expand_label(h: &mut ExplorationHistory<'_>, source: &[u32], label: u32) -> Vec<StateId> {
    let src = h.lookup(&CompositeState::new(source.to_vec())).unwrap();
    let id = h
        .frontier()
        .find(|f| f.source == src && f.label == label)
        .unwrap()
        .id;
    h.expand(id).unwrap()
}

#[test]
fn marked_initial_state_is_solved_immediately() {
    let sys = single(2, &[0], &[("c", true)], &[(0, 0, 1)]);
    let h = ExplorationHistory::new(&sys);
    assert_eq!(h.verdict(h.initial()), Verdict::Winning);
    assert_eq!(h.rank(h.initial()), Some(0));
    let r = run_episode(&sys, &mut BfsPolicy, 10, 0).unwrap();
    assert!(r.solved);
    assert_eq!((r.steps, r.return_value), (0, 0));
    let c = r.controller.unwrap();
    assert!(c.enablement().is_empty());
    assert!(verify_controller(&sys, &c).ok);
}

#[test]
fn unmarked_deadlock_initial_state_is_losing() {
    let sys = single(1, &[], &[("u", false)], &[]);
    let h = ExplorationHistory::new(&sys);
    assert_eq!(h.verdict(0), Verdict::Losing);
    assert!(h.is_finalized());
    let oracle = oracle_solve(&sys, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(oracle.initial().0, Verdict::Losing);
}

#[test]
fn at_1_1_initial_frontier_has_one_entry() {
    let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
    let h = ExplorationHistory::new(&sys);
    assert_eq!(h.frontier_len(), 1);
    assert_eq!(h.verdict(0), Verdict::Unknown);
}

#[test]
fn expanding_into_known_state_adds_no_frontier() {
    // 0 -a-> 1, 0 -b-> 1, 1 -c-> 2 (marked)
    let sys = single(
        3,
        &[2],
        &[("a", true), ("b", true), ("c", true)],
        &[(0, 0, 1), (0, 1, 1), (1, 2, 2)],
    );
    let mut h = ExplorationHistory::new(&sys);
    expand_label(&mut h, &[0], 0);
    assert_eq!(h.frontier_len(), 2);
    expand_label(&mut h, &[0], 1);
    assert_eq!(h.frontier_len(), 1);
    assert_eq!(h.pending_count(0), 0);
}

#[test]
fn expanding_into_deadlock_marks_target_losing() {
    let sys = single(
        3,
        &[2],
        &[("a", true), ("b", true)],
        &[(0, 0, 1), (0, 1, 2)],
    );
    let mut h = ExplorationHistory::new(&sys);
    let newly = expand_label(&mut h, &[0], 0);
    let dead = h.lookup(&CompositeState::new(vec![1])).unwrap();
    assert_eq!(h.verdict(dead), Verdict::Losing);
    assert_eq!(newly, vec![dead]);
    assert_eq!(h.verdict(0), Verdict::Unknown);
}

#[test]
fn expanding_outside_frontier_is_rejected() {
    let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
    let mut h = ExplorationHistory::new(&sys);
    h.expand(0).unwrap();
    assert_eq!(h.expand(0), Err(EngineError::NotInFrontier(0)));
    assert_eq!(h.expand(99), Err(EngineError::NotInFrontier(99)));
}

#[test]
fn uncontrollable_edge_to_losing_target_loses() {
    // rule L1: 0 -u-> 1 (deadlock), 0 -c-> 2 (marked)
    let sys = single(
        3,
        &[2],
        &[("u", false), ("c", true)],
        &[(0, 0, 1), (0, 1, 2)],
    );
    let mut h = ExplorationHistory::new(&sys);
    let newly = expand_label(&mut h, &[0], 0);
    assert_eq!(h.verdict(0), Verdict::Losing);
    assert!(newly.contains(&0));
    let oracle = oracle_solve(&sys, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(oracle.initial().0, Verdict::Losing);
}

#[test]
fn all_uncontrollable_edges_winning_wins() {
    // rule W2: 0 -u1-> 1 (marked), 0 -u2-> 2 (marked)
    let sys = single(
        3,
        &[1, 2],
        &[("u1", false), ("u2", false)],
        &[(0, 0, 1), (0, 1, 2)],
    );
    let mut h = ExplorationHistory::new(&sys);
    expand_label(&mut h, &[0], 0);
    assert_eq!(h.verdict(0), Verdict::Unknown);
    expand_label(&mut h, &[0], 1);
    assert_eq!(h.verdict(0), Verdict::Winning);
    assert_eq!(h.rank(0), Some(1));
}

#[test]
fn controllable_chain_propagates_ranks() {
    // s0 -c-> s1 -c-> s2 (marked); expand the far edge first
    let sys = single(
        3,
        &[2],
        &[("a", true), ("b", true)],
        &[(0, 0, 1), (1, 1, 2)],
    );
    let mut h = ExplorationHistory::new(&sys);
    expand_label(&mut h, &[0], 0);
    let newly = expand_label(&mut h, &[1], 1);
    let s1 = h.lookup(&CompositeState::new(vec![1])).unwrap();
    let s2 = h.lookup(&CompositeState::new(vec![2])).unwrap();
    assert_eq!(newly, vec![s2, s1, 0]);
    assert_eq!(
        [h.rank(s2), h.rank(s1), h.rank(0)],
        [Some(0), Some(1), Some(2)]
    );
    let oracle = oracle_solve(&sys, DEFAULT_STATE_CAP).unwrap();
    for s in [0, s1, s2] {
        assert_eq!(oracle.get(h.state(s)).unwrap().1, h.rank(s));
    }
}

#[test]
fn exhausted_frontier_finalizes_cycles_as_losing() {
    // 0 -a-> 1 -b-> 0, nothing marked reachable
    let sys = single(
        3,
        &[2],
        &[("a", true), ("b", true)],
        &[(0, 0, 1), (1, 1, 0)],
    );
    let mut h = ExplorationHistory::new(&sys);
    expand_label(&mut h, &[0], 0);
    assert_eq!(h.verdict(0), Verdict::Unknown);
    expand_label(&mut h, &[1], 1);
    assert!(h.is_finalized());
    assert_eq!(h.verdict(0), Verdict::Losing);
}

#[test]
fn at_1_1_needs_exactly_four_expansions() {
    let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
    for seed in 0..5 {
        for r in [
            run_episode(&sys, &mut RandomPolicy, 100, seed).unwrap(),
            run_episode(&sys, &mut BfsPolicy, 100, seed).unwrap(),
            run_episode(&sys, &mut DfsPolicy, 4, seed).unwrap(),
        ] {
            assert!(r.solved);
            assert_eq!(r.steps, 4);
            assert_eq!(r.return_value, -4);
        }
    }
    let r = run_episode(&sys, &mut BfsPolicy, 2, 0).unwrap();
    assert!(!r.solved);
    assert_eq!(
        (r.steps, r.return_value, r.verdict_s0),
        (2, -2, Verdict::Unknown)
    );
}

#[test]
fn at_1_1_controller_enables_enter_and_land() {
    let p = AtParams::new(1, 1).unwrap();
    let sys = build_at(p).unwrap();
    let r = run_episode(&sys, &mut BfsPolicy, 10, 0).unwrap();
    let c = r.controller.unwrap();
    let names: Vec<_> = c
        .enablement()
        .values()
        .flat_map(|s| s.iter().map(|&l| sys.label(l).name.clone()))
        .collect();
    assert_eq!(names.len(), 2);
    assert!(names.contains(&"enter_1_1".to_string()));
    assert!(names.contains(&"land_1".to_string()));
    assert_eq!(c.domain().len(), 5);
    assert!(verify_controller(&sys, &c).ok);

    // disabling land at alt_1 leaves the plane stuck
    let mut broken = c.clone();
    let alt = at_state(p, &[PlaneState::Alt(1)], &[MonitorState::Occupied(1)]);
    broken.disable(&alt, sys.label_by_name("land_1").unwrap().id);
    let report = verify_controller(&sys, &broken);
    assert!(!report.ok);
    let blocking: Vec<_> = report
        .violations
        .iter()
        .filter(|v| v.kind == ViolationKind::Blocking)
        .collect();
    let stuck = blocking.iter().find(|v| v.state == alt).unwrap();
    let names: Vec<_> = stuck
        .path
        .iter()
        .map(|&l| sys.label(l).name.as_str())
        .collect();
    assert_eq!(names, ["request_1", "enter_1_1", "reach_1_1"]);
}

#[test]
fn controller_skips_losing_controllable_targets() {
    // 0 -a-> 1 (deadlock), 0 -b-> 2 (marked)
    let sys = single(
        3,
        &[2],
        &[("a", true), ("b", true)],
        &[(0, 0, 1), (0, 1, 2)],
    );
    let mut h = ExplorationHistory::new(&sys);
    expand_label(&mut h, &[0], 0);
    expand_label(&mut h, &[0], 1);
    assert_eq!(h.verdict(0), Verdict::Winning);
    let c = extract_controller(&h).unwrap();
    let q0 = CompositeState::new(vec![0]);
    assert!(c.enables(&q0, 1));
    assert!(!c.enables(&q0, 0));
    assert!(verify_controller(&sys, &c).ok);
}

#[test]
fn controller_requires_winning_initial_state() {
    let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
    let h = ExplorationHistory::new(&sys);
    assert!(matches!(
        extract_controller(&h),
        Err(EngineError::InitialNotWinning(_))
    ));
}

#[test]
fn controller_json_round_trip() {
    let sys = build_at(AtParams::new(2, 1).unwrap()).unwrap();
    let r = run_episode(&sys, &mut BfsPolicy, 10_000, 0).unwrap();
    assert!(r.solved);
    let c = r.controller.unwrap();
    let back = Controller::from_json(&c.to_json()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn at_2_1_oracle_has_losing_approach_state() {
    let p = AtParams::new(2, 1).unwrap();
    let sys = build_at(p).unwrap();
    let oracle = oracle_solve(&sys, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(oracle.initial().0, Verdict::Winning);
    let both = at_state(
        p,
        &[PlaneState::Approach(1), PlaneState::Approach(1)],
        &[MonitorState::Free],
    );
    assert_eq!(oracle.get(&both).unwrap().0, Verdict::Losing);
    assert!(oracle.losing_count() > 0);
}

#[test]
fn zero_budget_is_rejected() {
    let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
    assert_eq!(
        run_episode(&sys, &mut BfsPolicy, 0, 0).unwrap_err(),
        EngineError::ZeroBudget
    );
}
