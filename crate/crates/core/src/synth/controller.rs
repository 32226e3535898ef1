use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{EngineError, ExplorationHistory, StateId, Verdict};
use crate::des::{CompositeState, CompositeSystem, LabelId};

/// Supervisor over composite states. Uncontrollable events are always
/// permitted; controllable ones only where listed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Controller {
    enabled: BTreeMap<CompositeState, BTreeSet<LabelId>>,
    domain: BTreeSet<CompositeState>,
}

#[derive(Serialize, Deserialize)]
struct ControllerEntry {
    state: CompositeState,
    enabled: Vec<LabelId>,
}

impl Controller {
    pub fn new(
        enabled: BTreeMap<CompositeState, BTreeSet<LabelId>>,
        domain: BTreeSet<CompositeState>,
    ) -> Self {
        Self { enabled, domain }
    }

    pub fn domain(&self) -> &BTreeSet<CompositeState> {
        &self.domain
    }

    /// States with a non-empty enablement set.
    pub fn enablement(&self) -> &BTreeMap<CompositeState, BTreeSet<LabelId>> {
        &self.enabled
    }

    pub fn enables(&self, q: &CompositeState, label: LabelId) -> bool {
        self.enabled.get(q).is_some_and(|s| s.contains(&label))
    }

    pub fn disable(&mut self, q: &CompositeState, label: LabelId) {
        if let Some(set) = self.enabled.get_mut(q) {
            set.remove(&label);
            if set.is_empty() {
                self.enabled.remove(q);
            }
        }
    }

    /// JSON array of `{state, enabled}` over the domain, in state order.
    pub fn to_json(&self) -> String {
        let entries: Vec<ControllerEntry> = self
            .domain
            .iter()
            .map(|q| ControllerEntry {
                state: q.clone(),
                enabled: self
                    .enabled
                    .get(q)
                    .map(|s| s.iter().copied().collect())
                    .unwrap_or_default(),
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("controller serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let entries: Vec<ControllerEntry> = serde_json::from_str(text)?;
        let mut c = Controller::default();
        for e in entries {
            if !e.enabled.is_empty() {
                c.enabled
                    .insert(e.state.clone(), e.enabled.into_iter().collect());
            }
            c.domain.insert(e.state);
        }
        Ok(c)
    }
}

/// Builds the controller witnessed by the explored graph: in each Winning
/// state, enable the expanded controllable transitions into Winning states of
/// strictly smaller rank. Marked states are terminal.
pub fn extract_controller(h: &ExplorationHistory<'_>) -> Result<Controller, EngineError> {
    let init = h.initial();
    if h.verdict(init) != Verdict::Winning {
        return Err(EngineError::InitialNotWinning(h.verdict(init)));
    }
    let sys = h.system();
    let mut controller = Controller::default();
    let mut seen: BTreeSet<StateId> = BTreeSet::from([init]);
    let mut queue = VecDeque::from([init]);
    while let Some(s) = queue.pop_front() {
        let q = h.state(s).clone();
        controller.domain.insert(q.clone());
        if h.is_marked(s) {
            continue;
        }
        let rank = h.rank(s).expect("domain states are winning");
        let mut enabled = BTreeSet::new();
        for (label, target, expanded) in h.edges(s) {
            let follow = if sys.is_controllable(label) {
                let ok = expanded && h.rank(target).is_some_and(|r| r < rank);
                if ok {
                    enabled.insert(label);
                }
                ok
            } else {
                true
            };
            if follow && seen.insert(target) {
                queue.push_back(target);
            }
        }
        if !enabled.is_empty() {
            controller.enabled.insert(q, enabled);
        }
    }
    Ok(controller)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// A reachable unmarked state with no permitted transition.
    UnmarkedDeadlock,
    /// A reachable state from which no marked state is reachable.
    Blocking,
    /// A reachable state the controller does not cover.
    OutsideDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub state: CompositeState,
    /// Labels from the initial state to `state` in the controlled system.
    pub path: Vec<LabelId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub reachable_states: usize,
    pub violations: Vec<Violation>,
}

/// Explores the controlled composition (uncontrollable events plus enabled
/// controllables, marked states terminal) and checks deadlock freedom,
/// non-blocking, and domain coverage.
pub fn verify_controller(sys: &CompositeSystem, c: &Controller) -> VerificationReport {
    let init = sys.initial_state();
    let mut states = vec![init.clone()];
    let mut index: FxHashMap<CompositeState, usize> = FxHashMap::default();
    index.insert(init, 0);
    let mut parent: Vec<Option<(usize, LabelId)>> = vec![None];
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new()];
    let mut violations = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    let path_to = |parent: &[Option<(usize, LabelId)>], mut s: usize| {
        let mut labels = Vec::new();
        while let Some((p, l)) = parent[s] {
            labels.push(l);
            s = p;
        }
        labels.reverse();
        labels
    };

    while let Some(s) = queue.pop_front() {
        let q = states[s].clone();
        if !c.domain.contains(&q) {
            violations.push(Violation {
                kind: ViolationKind::OutsideDomain,
                state: q.clone(),
                path: path_to(&parent, s),
            });
        }
        if sys.is_marked(&q) {
            continue;
        }
        let mut moved = false;
        for (label, target) in sys.enabled_transitions(&q) {
            if sys.is_controllable(label) && !c.enables(&q, label) {
                continue;
            }
            moved = true;
            let t = match index.get(&target) {
                Some(&t) => t,
                None => {
                    let t = states.len();
                    index.insert(target.clone(), t);
                    states.push(target);
                    parent.push(Some((s, label)));
                    reverse.push(Vec::new());
                    queue.push_back(t);
                    t
                }
            };
            reverse[t].push(s);
        }
        if !moved {
            violations.push(Violation {
                kind: ViolationKind::UnmarkedDeadlock,
                state: q,
                path: path_to(&parent, s),
            });
        }
    }

    let mut coreach = vec![false; states.len()];
    let mut stack: Vec<usize> = (0..states.len())
        .filter(|&s| sys.is_marked(&states[s]))
        .collect();
    for &s in &stack {
        coreach[s] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &reverse[s] {
            if !coreach[p] {
                coreach[p] = true;
                stack.push(p);
            }
        }
    }
    for (s, ok) in coreach.iter().enumerate() {
        if !ok {
            violations.push(Violation {
                kind: ViolationKind::Blocking,
                state: states[s].clone(),
                path: path_to(&parent, s),
            });
        }
    }
    VerificationReport {
        ok: violations.is_empty(),
        reachable_states: states.len(),
        violations,
    }
}
