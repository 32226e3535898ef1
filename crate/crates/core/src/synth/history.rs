use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::frontier::OrderedIds;
use super::EngineError;
use crate::des::{CompositeState, CompositeSystem, EnabledSummary, LabelId};

/// Index of a state known to the exploration (discovered or only seen as a
/// frontier target).
pub type StateId = u32;

/// Stable identifier of a frontier transition. Ids increase in creation order,
/// so the frontier order is the id order.
pub type FrontierId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Winning,
    Losing,
    Unknown,
}

impl Verdict {
    pub fn is_known(self) -> bool {
        self != Verdict::Unknown
    }
}

/// An unexplored transition out of a discovered state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontierTransition {
    pub id: FrontierId,
    pub source: StateId,
    /// Position of this transition in the source's enabled list.
    pub edge: u32,
    pub label: LabelId,
    pub target: StateId,
}

#[derive(Debug, Clone)]
struct Edge {
    label: LabelId,
    controllable: bool,
    target: StateId,
    frontier: FrontierId,
    expanded: bool,
}

#[derive(Debug, Clone)]
struct Discovered {
    insertion_index: u32,
    depth: u32,
    edges: Vec<Edge>,
    pending: u32,
    verdict: Verdict,
    rank: u32,
    /// Expanded transitions into this state, as `(source, edge index)`.
    parents: Vec<(StateId, u32)>,
}

#[derive(Debug, Clone)]
struct Known {
    key: CompositeState,
    marked: bool,
    marked_fraction: f64,
    summary: EnabledSummary,
    discovered: Option<Box<Discovered>>,
    /// Frontier transitions ever created with this state as target.
    incoming: Vec<FrontierId>,
}

/// The partially explored composition: discovered states, expanded
/// transitions, the frontier, and per-state verdicts and ranks.
///
/// Verdict rules (least-fixpoint reachability game, uncontrollable events
/// adversarial):
/// - marked states are Winning with rank 0;
/// - a state is Winning once every uncontrollable transition is expanded into
///   a Winning target and either it has an uncontrollable transition or some
///   expanded controllable transition reaches a Winning target;
/// - a state is Losing once an expanded uncontrollable transition reaches a
///   Losing target, or once it is unmarked, fully expanded, and every
///   successor is Losing;
/// - when the frontier empties, every remaining Unknown state is Losing.
#[derive(Debug, Clone)]
pub struct ExplorationHistory<'s> {
    sys: &'s CompositeSystem,
    states: Vec<Known>,
    index: FxHashMap<CompositeState, StateId>,
    discovered: Vec<StateId>,
    frontier: Vec<FrontierTransition>,
    alive: OrderedIds,
    expansions: Vec<FrontierId>,
    last_target: Option<StateId>,
    touched: Vec<FrontierId>,
    verdict_log: Vec<(StateId, Verdict)>,
    finalized: bool,
}

impl<'s> ExplorationHistory<'s> {
    /// Starts an exploration at the initial state of `sys`.
    pub fn new(sys: &'s CompositeSystem) -> Self {
        let mut h = Self {
            sys,
            states: Vec::new(),
            index: FxHashMap::default(),
            discovered: Vec::new(),
            frontier: Vec::new(),
            alive: OrderedIds::default(),
            expansions: Vec::new(),
            last_target: None,
            touched: Vec::new(),
            verdict_log: Vec::new(),
            finalized: false,
        };
        let init = h.intern(sys.initial_state());
        h.discover(init, 0);
        if h.alive.len() == 0 {
            h.finalize();
        }
        h
    }

    pub fn system(&self) -> &'s CompositeSystem {
        self.sys
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn state(&self, id: StateId) -> &CompositeState {
        &self.states[id as usize].key
    }

    pub fn lookup(&self, q: &CompositeState) -> Option<StateId> {
        self.index.get(q).copied()
    }

    pub fn known_count(&self) -> usize {
        self.states.len()
    }

    pub fn discovered_count(&self) -> usize {
        self.discovered.len()
    }

    /// Discovered states in discovery order.
    pub fn discovered_states(&self) -> &[StateId] {
        &self.discovered
    }

    pub fn is_discovered(&self, id: StateId) -> bool {
        self.states[id as usize].discovered.is_some()
    }

    fn disc(&self, id: StateId) -> Option<&Discovered> {
        self.states[id as usize].discovered.as_deref()
    }

    fn disc_mut(&mut self, id: StateId) -> &mut Discovered {
        self.states[id as usize]
            .discovered
            .as_deref_mut()
            .expect("state is discovered")
    }

    pub fn verdict(&self, id: StateId) -> Verdict {
        self.disc(id).map_or(Verdict::Unknown, |d| d.verdict)
    }

    /// Winning witness depth; `None` unless the state is Winning.
    pub fn rank(&self, id: StateId) -> Option<u32> {
        self.disc(id)
            .filter(|d| d.verdict == Verdict::Winning)
            .map(|d| d.rank)
    }

    pub fn is_marked(&self, id: StateId) -> bool {
        self.states[id as usize].marked
    }

    pub fn marked_fraction(&self, id: StateId) -> f64 {
        self.states[id as usize].marked_fraction
    }

    pub fn enabled_summary(&self, id: StateId) -> EnabledSummary {
        self.states[id as usize].summary
    }

    pub fn insertion_index(&self, id: StateId) -> Option<u32> {
        self.disc(id).map(|d| d.insertion_index)
    }

    /// Length of the discovery path from the initial state.
    pub fn depth(&self, id: StateId) -> Option<u32> {
        self.disc(id).map(|d| d.depth)
    }

    /// Number of enabled transitions of a discovered state not yet expanded.
    pub fn pending_count(&self, id: StateId) -> u32 {
        self.disc(id).map_or(0, |d| d.pending)
    }

    /// Enabled transitions of a discovered state as `(label, target, expanded)`.
    pub fn edges(&self, id: StateId) -> impl Iterator<Item = (LabelId, StateId, bool)> + '_ {
        self.disc(id)
            .into_iter()
            .flat_map(|d| d.edges.iter().map(|e| (e.label, e.target, e.expanded)))
    }

    /// Expanded transitions into a discovered state, as `(source, label)`.
    pub fn parents(&self, id: StateId) -> impl Iterator<Item = (StateId, LabelId)> + '_ {
        self.disc(id).into_iter().flat_map(move |d| {
            d.parents
                .iter()
                .map(move |&(src, e)| (src, self.disc(src).unwrap().edges[e as usize].label))
        })
    }

    /// Number of expansions performed so far, `|h|`.
    pub fn steps(&self) -> usize {
        self.expansions.len()
    }

    /// Frontier ids in expansion order.
    pub fn expansions(&self) -> &[FrontierId] {
        &self.expansions
    }

    pub fn last_expanded_target(&self) -> Option<StateId> {
        self.last_target
    }

    pub fn frontier_len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_in_frontier(&self, id: FrontierId) -> bool {
        self.alive.contains(id)
    }

    /// Any frontier transition ever created, alive or not.
    pub fn transition(&self, id: FrontierId) -> &FrontierTransition {
        &self.frontier[id as usize]
    }

    /// The frontier in order.
    pub fn frontier(&self) -> impl Iterator<Item = &FrontierTransition> + '_ {
        self.alive.iter().map(|id| &self.frontier[id as usize])
    }

    /// The frontier transition at position `index`.
    pub fn frontier_at(&self, index: usize) -> Option<FrontierId> {
        self.alive.nth(index)
    }

    /// Position of an alive frontier transition.
    pub fn frontier_position(&self, id: FrontierId) -> Option<usize> {
        self.alive.contains(id).then(|| self.alive.rank(id))
    }

    /// Frontier transitions whose features may have changed (created, removed,
    /// or with an updated source or target), as an append-only log. Consumers
    /// keep their own cursor into it.
    pub fn touched_log(&self) -> &[FrontierId] {
        &self.touched
    }

    /// Every verdict issued so far, in order.
    pub fn verdict_log(&self) -> &[(StateId, Verdict)] {
        &self.verdict_log
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn target_discovered(&self, ft: &FrontierTransition) -> bool {
        self.is_discovered(ft.target)
    }

    fn intern(&mut self, q: CompositeState) -> StateId {
        if let Some(&id) = self.index.get(&q) {
            return id;
        }
        let id = self.states.len() as StateId;
        self.states.push(Known {
            marked: self.sys.is_marked(&q),
            marked_fraction: self.sys.marked_fraction(&q),
            summary: self.sys.enabled_summary(&q),
            discovered: None,
            incoming: Vec::new(),
            key: q.clone(),
        });
        self.index.insert(q, id);
        id
    }

    fn touch_incoming(&mut self, id: StateId) {
        let Self {
            states,
            alive,
            touched,
            ..
        } = self;
        touched.extend(
            states[id as usize]
                .incoming
                .iter()
                .copied()
                .filter(|&f| alive.contains(f)),
        );
    }

    fn touch_outgoing(&mut self, id: StateId) {
        if let Some(d) = self.states[id as usize].discovered.as_deref() {
            let alive = &self.alive;
            self.touched.extend(
                d.edges
                    .iter()
                    .filter(|e| alive.contains(e.frontier))
                    .map(|e| e.frontier),
            );
        }
    }

    fn discover(&mut self, id: StateId, depth: u32) {
        let key = self.states[id as usize].key.clone();
        let mut edges = Vec::new();
        for (label, target) in self.sys.enabled_transitions(&key) {
            let tid = self.intern(target);
            let fid = self.frontier.len() as FrontierId;
            self.frontier.push(FrontierTransition {
                id: fid,
                source: id,
                edge: edges.len() as u32,
                label,
                target: tid,
            });
            self.alive.push(fid);
            self.touched.push(fid);
            self.states[tid as usize].incoming.push(fid);
            edges.push(Edge {
                label,
                controllable: self.sys.is_controllable(label),
                target: tid,
                frontier: fid,
                expanded: false,
            });
        }
        let marked = self.states[id as usize].marked;
        let verdict = if marked {
            Verdict::Winning
        } else if edges.is_empty() {
            Verdict::Losing
        } else {
            Verdict::Unknown
        };
        let pending = edges.len() as u32;
        self.states[id as usize].discovered = Some(Box::new(Discovered {
            insertion_index: self.discovered.len() as u32,
            depth,
            edges,
            pending,
            verdict,
            rank: 0,
            parents: Vec::new(),
        }));
        self.discovered.push(id);
        self.touch_incoming(id);
        if verdict.is_known() {
            self.verdict_log.push((id, verdict));
        }
    }

    /// Expands a frontier transition and propagates verdicts. Returns the
    /// states classified by this expansion.
    pub fn expand(&mut self, id: FrontierId) -> Result<Vec<StateId>, EngineError> {
        if !self.alive.remove(id) {
            return Err(EngineError::NotInFrontier(id));
        }
        self.touched.push(id);
        let ft = self.frontier[id as usize];
        let src = self.disc_mut(ft.source);
        src.edges[ft.edge as usize].expanded = true;
        src.pending -= 1;
        let depth = src.depth + 1;
        self.expansions.push(id);

        let mut newly = Vec::new();
        if !self.is_discovered(ft.target) {
            self.discover(ft.target, depth);
            if self.verdict(ft.target).is_known() {
                newly.push(ft.target);
            }
        }
        self.disc_mut(ft.target).parents.push((ft.source, ft.edge));

        if let Some(old) = self.last_target.replace(ft.target) {
            self.touch_outgoing(old);
        }
        self.touch_outgoing(ft.target);
        self.touch_outgoing(ft.source);

        newly.extend(self.propagate(ft.source));
        if self.alive.len() == 0 {
            newly.extend(self.finalize());
        }
        Ok(newly)
    }

    /// Re-evaluates `changed` (or, if it already has a verdict, its parents)
    /// and pushes new verdicts backwards until no rule fires.
    pub fn propagate(&mut self, changed: StateId) -> Vec<StateId> {
        let mut newly = Vec::new();
        let mut work = Vec::new();
        if self.verdict(changed).is_known() {
            work.extend(
                self.disc(changed)
                    .iter()
                    .flat_map(|d| d.parents.iter().map(|p| p.0)),
            );
        } else {
            work.push(changed);
        }
        while let Some(s) = work.pop() {
            if self.verdict(s).is_known() {
                continue;
            }
            let Some((verdict, rank)) = self.evaluate(s) else {
                continue;
            };
            let d = self.disc_mut(s);
            d.verdict = verdict;
            d.rank = rank;
            work.extend(d.parents.iter().map(|p| p.0));
            self.verdict_log.push((s, verdict));
            self.touch_incoming(s);
            newly.push(s);
        }
        newly
    }

    fn evaluate(&self, s: StateId) -> Option<(Verdict, u32)> {
        let d = self.disc(s)?;
        if self.states[s as usize].marked {
            return Some((Verdict::Winning, 0));
        }
        let mut unc_total = 0u32;
        let mut unc_winning = 0u32;
        let mut unc_max_rank = 0u32;
        let mut unc_losing = false;
        let mut ctrl_min_rank: Option<u32> = None;
        let mut all_expanded_losing = true;
        for e in &d.edges {
            if !e.controllable {
                unc_total += 1;
            }
            if !e.expanded {
                continue;
            }
            let t = self.disc(e.target).expect("expanded target is discovered");
            match (e.controllable, t.verdict) {
                (false, Verdict::Winning) => {
                    unc_winning += 1;
                    unc_max_rank = unc_max_rank.max(t.rank);
                }
                (false, Verdict::Losing) => unc_losing = true,
                (true, Verdict::Winning) => {
                    ctrl_min_rank = Some(ctrl_min_rank.map_or(t.rank, |r| r.min(t.rank)));
                }
                _ => {}
            }
            if t.verdict != Verdict::Losing {
                all_expanded_losing = false;
            }
        }
        if unc_total > 0 && unc_winning == unc_total {
            return Some((Verdict::Winning, unc_max_rank + 1));
        }
        if unc_total == 0 {
            if let Some(r) = ctrl_min_rank {
                return Some((Verdict::Winning, r + 1));
            }
        }
        if unc_losing || (d.pending == 0 && all_expanded_losing) {
            return Some((Verdict::Losing, 0));
        }
        None
    }

    /// Least-fixpoint closure once nothing is left to explore.
    fn finalize(&mut self) -> Vec<StateId> {
        self.finalized = true;
        let unknown: Vec<StateId> = self
            .discovered
            .iter()
            .copied()
            .filter(|&s| self.verdict(s) == Verdict::Unknown)
            .collect();
        for &s in &unknown {
            self.disc_mut(s).verdict = Verdict::Losing;
            self.verdict_log.push((s, Verdict::Losing));
        }
        unknown
    }
}
