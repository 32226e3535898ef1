//! Parameterized Air Traffic family `AT(n, k)`.
//!
//! `n` planes request to land through `k` altitude levels. Each plane is a
//! component; each altitude level has a monitor component that records which
//! plane occupies it. A plane reaching an occupied level drives that level's
//! monitor into an unmarked collision sink.
//!
//! Plane `i`:
//! `idle -request_i-> pending -enter_i_j-> approach_j -reach_i_j-> alt_j`,
//! then `alt_j -descend_i_j-> approach_{j-1}` for `j >= 2` and
//! `alt_1 -land_i-> landed`. Only `landed` is marked.
//!
//! Monitor `j`: `free -reach_i_j-> occupied_i`, `occupied_i -descend_i_j-> free`
//! (or `land_i` for level 1), `occupied_i -reach_i'_j-> collision`.
//! `free` and every `occupied_i` are marked.
//!
//! `request` and `reach` are uncontrollable; `enter`, `descend` and `land` are
//! controllable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::des::{
    ComponentAutomaton, CompositeState, CompositeSystem, EventLabel, ExplicitGraph, LabelId,
    StateCapExceeded,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtError {
    #[error("invalid AT parameters n={n}, k={k}: both must be at least 1")]
    InvalidParams { n: u32, k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtParams {
    /// Number of airplanes.
    pub n: u32,
    /// Number of altitude levels.
    pub k: u32,
}

impl AtParams {
    pub fn new(n: u32, k: u32) -> Result<Self, AtError> {
        if n == 0 || k == 0 {
            return Err(AtError::InvalidParams { n, k });
        }
        Ok(Self { n, k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneState {
    Idle,
    Pending,
    /// Approaching level `j` (1-based).
    Approach(u32),
    /// Holding at level `j` (1-based).
    Alt(u32),
    Landed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorState {
    Free,
    /// Occupied by plane `i` (1-based).
    Occupied(u32),
    Collision,
}

pub fn plane_state_index(p: AtParams, s: PlaneState) -> u32 {
    match s {
        PlaneState::Idle => 0,
        PlaneState::Pending => 1,
        PlaneState::Approach(j) => 2 * j,
        PlaneState::Alt(j) => 2 * j + 1,
        PlaneState::Landed => 2 * p.k + 2,
    }
}

pub fn monitor_state_index(p: AtParams, s: MonitorState) -> u32 {
    match s {
        MonitorState::Free => 0,
        MonitorState::Occupied(i) => i,
        MonitorState::Collision => p.n + 1,
    }
}

/// Composite state from explicit plane and monitor states.
pub fn at_state(p: AtParams, planes: &[PlaneState], monitors: &[MonitorState]) -> CompositeState {
    assert_eq!(planes.len(), p.n as usize);
    assert_eq!(monitors.len(), p.k as usize);
    CompositeState::new(
        planes
            .iter()
            .map(|&s| plane_state_index(p, s))
            .chain(monitors.iter().map(|&s| monitor_state_index(p, s)))
            .collect::<Vec<_>>(),
    )
}

struct Labels {
    alphabet: Vec<EventLabel>,
}

impl Labels {
    fn add(&mut self, name: String, controllable: bool) -> LabelId {
        let id = self.alphabet.len() as LabelId;
        self.alphabet.push(EventLabel {
            id,
            name,
            controllable,
        });
        id
    }
}

/// Per-plane label ids; level vectors are indexed by `j - 1`.
struct PlaneLabels {
    request: LabelId,
    enter: Vec<LabelId>,
    reach: Vec<LabelId>,
    /// `descend[j - 1]` exists for `j >= 2`; index 0 is unused.
    descend: Vec<Option<LabelId>>,
    land: LabelId,
}

pub fn build_at(p: AtParams) -> Result<CompositeSystem, AtError> {
    let p = AtParams::new(p.n, p.k)?;
    let (n, k) = (p.n, p.k);
    let mut labels = Labels {
        alphabet: Vec::new(),
    };
    let planes: Vec<PlaneLabels> = (1..=n)
        .map(|i| PlaneLabels {
            request: labels.add(format!("request_{i}"), false),
            enter: (1..=k)
                .map(|j| labels.add(format!("enter_{i}_{j}"), true))
                .collect(),
            reach: (1..=k)
                .map(|j| labels.add(format!("reach_{i}_{j}"), false))
                .collect(),
            descend: (1..=k)
                .map(|j| (j >= 2).then(|| labels.add(format!("descend_{i}_{j}"), true)))
                .collect(),
            land: labels.add(format!("land_{i}"), true),
        })
        .collect();

    let mut components = Vec::with_capacity((n + k) as usize);
    let idx = |s| plane_state_index(p, s);
    for (c, pl) in planes.iter().enumerate() {
        let mut local = vec![pl.request, pl.land];
        let mut trans = vec![
            (idx(PlaneState::Idle), pl.request, idx(PlaneState::Pending)),
            (idx(PlaneState::Alt(1)), pl.land, idx(PlaneState::Landed)),
        ];
        for j in 1..=k {
            let l = (j - 1) as usize;
            local.extend([pl.enter[l], pl.reach[l]]);
            trans.push((
                idx(PlaneState::Pending),
                pl.enter[l],
                idx(PlaneState::Approach(j)),
            ));
            trans.push((
                idx(PlaneState::Approach(j)),
                pl.reach[l],
                idx(PlaneState::Alt(j)),
            ));
            if let Some(d) = pl.descend[l] {
                local.push(d);
                trans.push((idx(PlaneState::Alt(j)), d, idx(PlaneState::Approach(j - 1))));
            }
        }
        components.push(
            ComponentAutomaton::new(c, 2 * k + 3, 0, [idx(PlaneState::Landed)], local, trans)
                .expect("plane automaton is well formed"),
        );
    }

    let midx = |s| monitor_state_index(p, s);
    for j in 1..=k {
        let l = (j - 1) as usize;
        let mut local = Vec::new();
        let mut trans = Vec::new();
        for (pi, pl) in planes.iter().enumerate() {
            let i = pi as u32 + 1;
            local.push(pl.reach[l]);
            trans.push((
                midx(MonitorState::Free),
                pl.reach[l],
                midx(MonitorState::Occupied(i)),
            ));
            for other in 1..=n {
                if other != i {
                    trans.push((
                        midx(MonitorState::Occupied(other)),
                        pl.reach[l],
                        midx(MonitorState::Collision),
                    ));
                }
            }
            let exit = if j == 1 { Some(pl.land) } else { pl.descend[l] };
            if let Some(e) = exit {
                local.push(e);
                trans.push((midx(MonitorState::Occupied(i)), e, midx(MonitorState::Free)));
            }
        }
        let marked = 0..=n;
        components.push(
            ComponentAutomaton::new((n + j - 1) as usize, n + 2, 0, marked, local, trans)
                .expect("monitor automaton is well formed"),
        );
    }
    Ok(CompositeSystem::new(labels.alphabet, components).expect("AT system is well formed"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceStats {
    pub reachable_states: usize,
    pub reachable_transitions: usize,
}

/// Exact reachable state and transition counts by exhaustive BFS.
pub fn instance_stats(
    sys: &CompositeSystem,
    cap: usize,
) -> Result<InstanceStats, StateCapExceeded> {
    let g = ExplicitGraph::enumerate(sys, cap)?;
    Ok(InstanceStats {
        reachable_states: g.states.len(),
        reachable_transitions: g.transition_count(),
    })
}
