use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::{CompositeState, CompositeSystem, LabelId};

/// Default limit on fully enumerated compositions.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("state cap exceeded: more than {cap} reachable states")]
pub struct StateCapExceeded {
    pub cap: usize,
}

/// The reachable part of a composition, fully enumerated by BFS from the
/// initial state. Index 0 is the initial state.
#[derive(Debug, Clone)]
pub struct ExplicitGraph {
    pub states: Vec<CompositeState>,
    pub index: FxHashMap<CompositeState, usize>,
    /// Outgoing edges per state, sorted by label.
    pub edges: Vec<Vec<(LabelId, usize)>>,
}

impl ExplicitGraph {
    pub fn enumerate(sys: &CompositeSystem, cap: usize) -> Result<Self, StateCapExceeded> {
        let init = sys.initial_state();
        let mut states = vec![init.clone()];
        let mut index = FxHashMap::default();
        index.insert(init, 0);
        let mut edges: Vec<Vec<(LabelId, usize)>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let mut out = Vec::new();
            for (label, target) in sys.enabled_transitions(&states[s]) {
                let id = match index.get(&target) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= cap {
                            return Err(StateCapExceeded { cap });
                        }
                        let id = states.len();
                        index.insert(target.clone(), id);
                        states.push(target);
                        queue.push_back(id);
                        id
                    }
                };
                out.push((label, id));
            }
            if edges.len() <= s {
                edges.resize(s + 1, Vec::new());
            }
            edges[s] = out;
        }
        edges.resize(states.len(), Vec::new());
        Ok(Self {
            states,
            index,
            edges,
        })
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }
}
