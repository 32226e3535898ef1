//! Component automata, their synchronous product, and lazy successor computation.
//!
//! The composed system is never materialized. A [`CompositeState`] is a tuple of
//! per-component local states, and [`CompositeSystem::enabled_transitions`]
//! computes its successors on demand. Labels are interned as dense integer ids;
//! names only matter when reading or writing the interchange format.

mod explicit;
mod format;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

pub use explicit::{ExplicitGraph, StateCapExceeded, DEFAULT_STATE_CAP};
pub use format::{parse_system, serialize_system};

/// Dense index into the global alphabet.
pub type LabelId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("component {component}: unknown label {label}")]
    UnknownLabel { component: usize, label: LabelId },
    #[error("component {component}: label {label} used in a transition but missing from the local alphabet")]
    LabelNotLocal { component: usize, label: LabelId },
    #[error(
        "component {component}: nondeterministic transitions from state {state} on label {label}"
    )]
    Nondeterministic {
        component: usize,
        state: u32,
        label: LabelId,
    },
    #[error("component {component}: invalid initial state {initial} (state_count {state_count})")]
    InvalidInitial {
        component: usize,
        initial: u32,
        state_count: u32,
    },
    #[error("component {component}: state {state} out of range")]
    InvalidState { component: usize, state: u32 },
    #[error("component {component}: state_count must be positive")]
    EmptyComponent { component: usize },
    #[error("system has no components")]
    NoComponents,
    #[error("alphabet ids must be dense 0..{len}; found {id}")]
    SparseAlphabet { id: LabelId, len: usize },
    #[error("duplicate label name {0:?}")]
    DuplicateLabelName(String),
    #[error("label {0} is not owned by any component")]
    UnownedLabel(LabelId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventLabel {
    pub id: LabelId,
    pub name: String,
    pub controllable: bool,
}

impl EventLabel {
    pub fn new(id: LabelId, name: impl Into<String>, controllable: bool) -> Self {
        Self {
            id,
            name: name.into(),
            controllable,
        }
    }
}

/// A deterministic finite automaton over a local sub-alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentAutomaton {
    initial: u32,
    marked: Vec<bool>,
    local_alphabet: Vec<LabelId>,
    /// Outgoing edges per state, sorted by label.
    outgoing: Vec<Vec<(LabelId, u32)>>,
}

impl ComponentAutomaton {
    /// Builds a component. `component` is only used to label errors.
    pub fn new(
        component: usize,
        state_count: u32,
        initial: u32,
        marked: impl IntoIterator<Item = u32>,
        local_alphabet: impl IntoIterator<Item = LabelId>,
        transitions: impl IntoIterator<Item = (u32, LabelId, u32)>,
    ) -> Result<Self, DesError> {
        if state_count == 0 {
            return Err(DesError::EmptyComponent { component });
        }
        if initial >= state_count {
            return Err(DesError::InvalidInitial {
                component,
                initial,
                state_count,
            });
        }
        let mut marked_flags = vec![false; state_count as usize];
        for s in marked {
            if s >= state_count {
                return Err(DesError::InvalidState {
                    component,
                    state: s,
                });
            }
            marked_flags[s as usize] = true;
        }
        let mut local: Vec<LabelId> = local_alphabet.into_iter().collect();
        local.sort_unstable();
        local.dedup();

        let mut outgoing = vec![Vec::new(); state_count as usize];
        for (from, label, to) in transitions {
            if from >= state_count {
                return Err(DesError::InvalidState {
                    component,
                    state: from,
                });
            }
            if to >= state_count {
                return Err(DesError::InvalidState {
                    component,
                    state: to,
                });
            }
            if local.binary_search(&label).is_err() {
                return Err(DesError::LabelNotLocal { component, label });
            }
            outgoing[from as usize].push((label, to));
        }
        for (state, edges) in outgoing.iter_mut().enumerate() {
            edges.sort_unstable();
            if let Some(w) = edges.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(DesError::Nondeterministic {
                    component,
                    state: state as u32,
                    label: w[0].0,
                });
            }
        }
        Ok(Self {
            initial,
            marked: marked_flags,
            local_alphabet: local,
            outgoing,
        })
    }

    pub fn state_count(&self) -> u32 {
        self.marked.len() as u32
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn is_marked(&self, state: u32) -> bool {
        self.marked[state as usize]
    }

    pub fn marked_states(&self) -> impl Iterator<Item = u32> + '_ {
        self.marked
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(s, _)| s as u32)
    }

    pub fn local_alphabet(&self) -> &[LabelId] {
        &self.local_alphabet
    }

    pub fn owns(&self, label: LabelId) -> bool {
        self.local_alphabet.binary_search(&label).is_ok()
    }

    /// Outgoing edges of `state`, sorted by label.
    pub fn outgoing(&self, state: u32) -> &[(LabelId, u32)] {
        &self.outgoing[state as usize]
    }

    pub fn successor(&self, state: u32, label: LabelId) -> Option<u32> {
        let edges = self.outgoing(state);
        edges
            .binary_search_by_key(&label, |e| e.0)
            .ok()
            .map(|i| edges[i].1)
    }

    /// All transitions as `(from, label, to)`, ordered by source then label.
    pub fn transitions(&self) -> impl Iterator<Item = (u32, LabelId, u32)> + '_ {
        self.outgoing
            .iter()
            .enumerate()
            .flat_map(|(from, edges)| edges.iter().map(move |&(l, to)| (from as u32, l, to)))
    }
}

/// A global state: one local state per component.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositeState(Box<[u32]>);

impl CompositeState {
    pub fn new(locals: impl Into<Box<[u32]>>) -> Self {
        Self(locals.into())
    }

    pub fn locals(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for CompositeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl serde::Serialize for CompositeState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for CompositeState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Vec::<u32>::deserialize(deserializer).map(|v| Self(v.into_boxed_slice()))
    }
}

/// Counts describing the enabled set of a state without building targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnabledSummary {
    pub enabled: u32,
    pub uncontrollable: u32,
}

/// Synchronous product of component automata sharing a global alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeSystem {
    alphabet: Vec<EventLabel>,
    components: Vec<ComponentAutomaton>,
    owner_count: Vec<u32>,
}

impl CompositeSystem {
    /// Validates and assembles a system. The alphabet is sorted by id and must
    /// be dense; every label must be owned by some component.
    pub fn new(
        mut alphabet: Vec<EventLabel>,
        components: Vec<ComponentAutomaton>,
    ) -> Result<Self, DesError> {
        if components.is_empty() {
            return Err(DesError::NoComponents);
        }
        alphabet.sort_by_key(|l| l.id);
        let len = alphabet.len();
        let mut names = HashSet::new();
        for (pos, label) in alphabet.iter().enumerate() {
            if label.id as usize != pos {
                return Err(DesError::SparseAlphabet { id: label.id, len });
            }
            if !names.insert(label.name.as_str()) {
                return Err(DesError::DuplicateLabelName(label.name.clone()));
            }
        }
        let mut owner_count = vec![0u32; len];
        for (idx, comp) in components.iter().enumerate() {
            for &label in comp.local_alphabet() {
                if label as usize >= len {
                    return Err(DesError::UnknownLabel {
                        component: idx,
                        label,
                    });
                }
                owner_count[label as usize] += 1;
            }
        }
        if let Some(pos) = owner_count.iter().position(|&c| c == 0) {
            return Err(DesError::UnownedLabel(pos as LabelId));
        }
        Ok(Self {
            alphabet,
            components,
            owner_count,
        })
    }

    pub fn alphabet(&self) -> &[EventLabel] {
        &self.alphabet
    }

    pub fn label(&self, id: LabelId) -> &EventLabel {
        &self.alphabet[id as usize]
    }

    pub fn label_by_name(&self, name: &str) -> Option<&EventLabel> {
        self.alphabet.iter().find(|l| l.name == name)
    }

    pub fn is_controllable(&self, id: LabelId) -> bool {
        self.alphabet[id as usize].controllable
    }

    pub fn components(&self) -> &[ComponentAutomaton] {
        &self.components
    }

    pub fn initial_state(&self) -> CompositeState {
        CompositeState::new(
            self.components
                .iter()
                .map(|c| c.initial())
                .collect::<Vec<_>>(),
        )
    }

    pub fn is_valid_state(&self, q: &CompositeState) -> bool {
        q.len() == self.components.len()
            && q.locals()
                .iter()
                .zip(&self.components)
                .all(|(&s, c)| s < c.state_count())
    }

    /// Global marking: every component is locally marked.
    pub fn is_marked(&self, q: &CompositeState) -> bool {
        q.locals()
            .iter()
            .zip(&self.components)
            .all(|(&s, c)| c.is_marked(s))
    }

    pub fn marked_fraction(&self, q: &CompositeState) -> f64 {
        let marked = q
            .locals()
            .iter()
            .zip(&self.components)
            .filter(|(&s, c)| c.is_marked(s))
            .count();
        marked as f64 / self.components.len() as f64
    }

    /// Local moves `(label, component, target)` sorted by label.
    fn local_moves(&self, q: &CompositeState, buf: &mut Vec<(LabelId, u32, u32)>) {
        buf.clear();
        for (c, (&s, comp)) in q.locals().iter().zip(&self.components).enumerate() {
            buf.extend(comp.outgoing(s).iter().map(|&(l, to)| (l, c as u32, to)));
        }
        buf.sort_unstable();
    }

    /// Calls `f` for every globally enabled label with the slice of local moves
    /// that realize it, in increasing label order.
    fn for_each_enabled(
        &self,
        q: &CompositeState,
        mut f: impl FnMut(LabelId, &[(LabelId, u32, u32)]),
    ) {
        let mut moves = Vec::new();
        self.local_moves(q, &mut moves);
        let mut i = 0;
        while i < moves.len() {
            let label = moves[i].0;
            let mut j = i + 1;
            while j < moves.len() && moves[j].0 == label {
                j += 1;
            }
            if (j - i) as u32 == self.owner_count[label as usize] {
                f(label, &moves[i..j]);
            }
            i = j;
        }
    }

    /// Globally enabled transitions of `q`, sorted by label id. Owners of a
    /// label move together; non-owners keep their local state.
    pub fn enabled_transitions(&self, q: &CompositeState) -> Vec<(LabelId, CompositeState)> {
        let mut out = Vec::new();
        self.for_each_enabled(q, |label, moves| {
            let mut locals: Box<[u32]> = q.locals().into();
            for &(_, c, to) in moves {
                locals[c as usize] = to;
            }
            out.push((label, CompositeState(locals)));
        });
        out
    }

    pub fn enabled_summary(&self, q: &CompositeState) -> EnabledSummary {
        let mut summary = EnabledSummary::default();
        self.for_each_enabled(q, |label, _| {
            summary.enabled += 1;
            if !self.is_controllable(label) {
                summary.uncontrollable += 1;
            }
        });
        summary
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two components sharing label `a` (id 0); component 1 also owns `b` (id 1).
    pub(crate) fn shared_label_system(first_enables_a: bool) -> CompositeSystem {
        let alphabet = vec![
            EventLabel::new(0, "a", true),
            EventLabel::new(1, "b", false),
        ];
        let c0 = ComponentAutomaton::new(
            0,
            2,
            0,
            [1],
            [0],
            if first_enables_a {
                vec![(0, 0, 1)]
            } else {
                vec![]
            },
        )
        .unwrap();
        let c1 = ComponentAutomaton::new(1, 2, 0, [1], [0, 1], [(0, 0, 1), (0, 1, 0)]).unwrap();
        CompositeSystem::new(alphabet, vec![c0, c1]).unwrap()
    }

    #[test]
    fn synchronization_blocks_label_when_one_owner_refuses() {
        let sys = shared_label_system(false);
        let q = sys.initial_state();
        let labels: Vec<_> = sys
            .enabled_transitions(&q)
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        assert_eq!(labels, vec![1]);
    }

    #[test]
    fn shared_label_moves_all_owners() {
        let sys = shared_label_system(true);
        let out = sys.enabled_transitions(&sys.initial_state());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, 0);
        assert_eq!(out[0].1.locals(), &[1, 1]);
        // b is owned only by component 1; component 0 stays put
        assert_eq!(out[1].1.locals(), &[0, 0]);
        assert_eq!(
            sys.enabled_summary(&sys.initial_state()),
            EnabledSummary {
                enabled: 2,
                uncontrollable: 1
            }
        );
    }

    #[test]
    fn deadlock_has_no_transitions() {
        let sys = shared_label_system(true);
        let q = CompositeState::new(vec![1, 1]);
        assert!(sys.enabled_transitions(&q).is_empty());
        assert!(sys.is_marked(&q));
    }

    #[test]
    fn marking_is_conjunction() {
        let sys = shared_label_system(true);
        assert!(!sys.is_marked(&CompositeState::new(vec![1, 0])));
        assert!(sys.is_marked(&CompositeState::new(vec![1, 1])));
        assert_eq!(sys.marked_fraction(&CompositeState::new(vec![1, 0])), 0.5);
    }

    #[test]
    fn rejects_nondeterminism() {
        let err = ComponentAutomaton::new(3, 3, 0, [], [0], [(0, 0, 1), (0, 0, 2)]).unwrap_err();
        assert_eq!(
            err,
            DesError::Nondeterministic {
                component: 3,
                state: 0,
                label: 0
            }
        );
    }

    #[test]
    fn rejects_bad_initial_and_unowned_labels() {
        assert!(matches!(
            ComponentAutomaton::new(0, 2, 2, [], [], []),
            Err(DesError::InvalidInitial { .. })
        ));
        let c = ComponentAutomaton::new(0, 1, 0, [0], [0], []).unwrap();
        let alphabet = vec![EventLabel::new(0, "a", true), EventLabel::new(1, "b", true)];
        assert_eq!(
            CompositeSystem::new(alphabet, vec![c]),
            Err(DesError::UnownedLabel(1))
        );
    }
}
