//! Incrementally maintained Q-values over the frontier.
//!
//! A bank follows the history's touched log, so each step re-scores only the
//! frontier entries whose features may have changed. Entries with equal
//! feature vectors share a group and a single network evaluation. Each expert
//! lane keeps the groups ordered by Q, and optionally a sum tree of
//! `size * exp((q - c) / T)` for a per-lane reference `c`, which gives the
//! softmax normalizer without a pass over the frontier.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use ordered_float::OrderedFloat;
use rustc_hash::FxHashMap;

use super::{extract_features, QNetwork, FEATURE_DIM};
use crate::synth::{ExplorationHistory, FrontierId};

/// Reference shift that triggers a rebuild of a lane's sum tree.
const REBASE_SPAN: f64 = 50.0;

/// Complete binary tree whose internal nodes are the sums of their children.
/// Every node is recomputed from its children, so the root depends only on the
/// current leaves.
#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    cap: usize,
    tree: Vec<f64>,
}

impl SumTree {
    pub(crate) fn new() -> Self {
        Self {
            cap: 1,
            tree: vec![0.0; 2],
        }
    }

    pub(crate) fn set(&mut self, i: usize, v: f64) {
        if i >= self.cap {
            self.grow(i + 1);
        }
        let mut p = self.cap + i;
        self.tree[p] = v;
        p /= 2;
        while p >= 1 {
            self.tree[p] = self.tree[2 * p] + self.tree[2 * p + 1];
            p /= 2;
        }
    }

    pub(crate) fn total(&self) -> f64 {
        self.tree[1]
    }

    fn grow(&mut self, need: usize) {
        let cap = need.next_power_of_two();
        let mut tree = vec![0.0; 2 * cap];
        tree[cap..cap + self.cap].copy_from_slice(&self.tree[self.cap..]);
        self.cap = cap;
        self.tree = tree;
        self.rebuild();
    }

    fn rebuild(&mut self) {
        for p in (1..self.cap).rev() {
            self.tree[p] = self.tree[2 * p] + self.tree[2 * p + 1];
        }
    }
}

#[derive(Debug, Clone)]
struct ExpSums {
    temperature: f64,
    reference: f64,
    /// `exp((q - reference) / temperature)` per group slot.
    terms: Vec<f64>,
    /// Indexed by group slot; leaf = group size * term.
    tree: SumTree,
}

impl ExpSums {
    fn term(&self, q: f64) -> f64 {
        ((q - self.reference) / self.temperature).exp()
    }
}

type OrderKey = (Reverse<OrderedFloat<f64>>, FrontierId);
type FeatureKey = [u64; FEATURE_DIM];

const NO_GROUP: u32 = u32::MAX;

/// Frontier entries sharing one feature vector, hence one Q per lane. The
/// smallest member id represents the group. Freed slots keep their member set
/// for reuse.
#[derive(Debug, Clone)]
struct Group {
    key: FeatureKey,
    members: BTreeSet<FrontierId>,
}

impl Group {
    fn rep(&self) -> Option<FrontierId> {
        self.members.first().copied()
    }
}

#[derive(Debug, Clone)]
struct Lane {
    net: QNetwork<f64>,
    /// Group representatives ordered by Q.
    order: BTreeSet<OrderKey>,
    /// Q per group slot.
    q: Vec<f64>,
    sums: Option<ExpSums>,
}

/// Cached Q-values of one or more experts over a single episode's frontier.
#[derive(Debug, Clone)]
pub(crate) struct ScoreBank {
    lanes: Vec<Lane>,
    cursor: usize,
    /// Group slot per frontier id.
    slot_of: Vec<u32>,
    groups: Vec<Group>,
    free: Vec<u32>,
    index: FxHashMap<FeatureKey, u32>,
}

impl ScoreBank {
    /// `temperature` enables the per-lane softmax normalizers.
    pub(crate) fn new(nets: Vec<QNetwork<f64>>, temperature: Option<f64>) -> Self {
        let lanes = nets
            .into_iter()
            .map(|net| Lane {
                net,
                order: BTreeSet::new(),
                q: Vec::new(),
                sums: temperature.map(|t| ExpSums {
                    temperature: t,
                    reference: f64::NAN,
                    terms: Vec::new(),
                    tree: SumTree::new(),
                }),
            })
            .collect();
        Self {
            lanes,
            cursor: 0,
            slot_of: Vec::new(),
            groups: Vec::new(),
            free: Vec::new(),
            index: FxHashMap::default(),
        }
    }

    /// Re-keys the group's order entries and normalizer leaves after its
    /// membership changed from representative `old_rep`.
    fn refresh(&mut self, slot: u32, old_rep: Option<FrontierId>) {
        let g = &self.groups[slot as usize];
        let new_rep = g.rep();
        let size = g.members.len() as f64;
        for lane in &mut self.lanes {
            let q = lane.q[slot as usize];
            if old_rep != new_rep {
                if let Some(r) = old_rep {
                    lane.order.remove(&(Reverse(OrderedFloat(q)), r));
                }
                if let Some(r) = new_rep {
                    lane.order.insert((Reverse(OrderedFloat(q)), r));
                }
            }
            if let Some(s) = &mut lane.sums {
                s.tree.set(
                    slot as usize,
                    if size > 0.0 {
                        size * s.terms[slot as usize]
                    } else {
                        0.0
                    },
                );
            }
        }
    }

    fn remove(&mut self, fid: FrontierId) {
        let Some(&slot) = self.slot_of.get(fid as usize) else {
            return;
        };
        if slot == NO_GROUP {
            return;
        }
        self.slot_of[fid as usize] = NO_GROUP;
        let g = &mut self.groups[slot as usize];
        let old_rep = g.rep();
        g.members.remove(&fid);
        if g.members.is_empty() {
            self.index.remove(&g.key);
            self.free.push(slot);
        }
        self.refresh(slot, old_rep);
    }

    fn insert(&mut self, fid: FrontierId, x: &[f64; FEATURE_DIM]) {
        let key = x.map(f64::to_bits);
        if fid as usize >= self.slot_of.len() {
            self.slot_of.resize(fid as usize + 1, NO_GROUP);
        }
        if let Some(&slot) = self.index.get(&key) {
            let g = &mut self.groups[slot as usize];
            let old_rep = g.rep();
            g.members.insert(fid);
            self.slot_of[fid as usize] = slot;
            self.refresh(slot, old_rep);
            return;
        }
        let slot = match self.free.pop() {
            Some(s) => {
                let g = &mut self.groups[s as usize];
                g.key = key;
                g.members.insert(fid);
                s
            }
            None => {
                self.groups.push(Group {
                    key,
                    members: BTreeSet::from([fid]),
                });
                (self.groups.len() - 1) as u32
            }
        };
        for lane in &mut self.lanes {
            let q = lane.net.forward(x);
            set_slot(&mut lane.q, slot, q);
            if let Some(s) = &mut lane.sums {
                let t = s.term(q);
                set_slot(&mut s.terms, slot, t);
            }
        }
        self.index.insert(key, slot);
        self.slot_of[fid as usize] = slot;
        self.refresh(slot, None);
    }

    fn rebase_if_needed(&mut self) {
        for lane in &mut self.lanes {
            let Some(&(Reverse(max), _)) = lane.order.first() else {
                continue;
            };
            let Some(s) = &mut lane.sums else { continue };
            if (max.0 - s.reference).abs() <= REBASE_SPAN * s.temperature {
                continue;
            }
            s.reference = max.0;
            let mut tree = SumTree::new();
            for (slot, g) in self.groups.iter().enumerate() {
                let t = s.term(lane.q[slot]);
                s.terms[slot] = t;
                if !g.members.is_empty() {
                    tree.set(slot, g.members.len() as f64 * t);
                }
            }
            s.tree = tree;
        }
    }

    /// Brings the cache up to date with `h`. A bank follows one history only.
    pub(crate) fn sync(&mut self, h: &ExplorationHistory<'_>) {
        let log = h.touched_log();
        for &fid in &log[self.cursor.min(log.len())..] {
            if !h.is_in_frontier(fid) {
                self.remove(fid);
                continue;
            }
            let x = extract_features::<f64>(h, h.transition(fid));
            let unchanged = match self.slot_of.get(fid as usize) {
                Some(&slot) if slot != NO_GROUP => {
                    self.groups[slot as usize].key == x.as_array().map(f64::to_bits)
                }
                _ => false,
            };
            if !unchanged {
                self.remove(fid);
                self.insert(fid, x.as_array());
            }
        }
        self.cursor = log.len();
        self.rebase_if_needed();
    }

    #[cfg(test)]
    pub(crate) fn q(&self, lane: usize, fid: FrontierId) -> f64 {
        match self.slot_of.get(fid as usize) {
            Some(&slot) if slot != NO_GROUP => self.lanes[lane].q[slot as usize],
            _ => f64::NAN,
        }
    }

    /// Highest-Q frontier entry of one lane, lowest id on ties.
    pub(crate) fn best(&self, lane: usize) -> Option<FrontierId> {
        self.lanes[lane].order.first().map(|&(_, fid)| fid)
    }

    /// Argmax over the frontier of `sum_i g_i softmax_i(q_i / T)`, lowest id on
    /// ties. Runs the threshold algorithm over the per-lane Q orders of the
    /// groups, so it usually stops after a few of them.
    pub(crate) fn best_mixed(&self, g: &[f64]) -> Option<FrontierId> {
        let terms: Vec<&[f64]> = self
            .lanes
            .iter()
            .map(|l| {
                l.sums
                    .as_ref()
                    .expect("bank built with a temperature")
                    .terms
                    .as_slice()
            })
            .collect();
        let alphas: Vec<f64> = self
            .lanes
            .iter()
            .zip(g)
            .map(|(l, &gi)| gi / l.sums.as_ref().map_or(1.0, |s| s.tree.total()))
            .collect();
        let score = |slot: usize| {
            terms
                .iter()
                .zip(&alphas)
                .fold(0.0, |acc, (t, &a)| acc + a * t[slot])
        };
        let mut iters: Vec<_> = self.lanes.iter().map(|l| l.order.iter()).collect();
        let mut best: Option<(f64, FrontierId)> = None;
        loop {
            let mut tau = 0.0;
            let mut deepest = 0;
            for (i, it) in iters.iter_mut().enumerate() {
                let Some(&(_, rep)) = it.next() else {
                    return best.map(|b| b.1);
                };
                let slot = self.slot_of[rep as usize] as usize;
                let s = score(slot);
                if best.is_none_or(|(bs, bid)| s > bs || (s == bs && rep < bid)) {
                    best = Some((s, rep));
                }
                tau += alphas[i] * terms[i][slot];
                deepest = deepest.max(rep);
            }
            let (bs, bid) = best?;
            if bs > tau || (bs == tau && bid <= deepest) {
                return Some(bid);
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn normalizer(&self, lane: usize) -> (f64, f64) {
        let s = self.lanes[lane].sums.as_ref().unwrap();
        (s.tree.total(), s.reference)
    }
}

fn set_slot(v: &mut Vec<f64>, slot: u32, x: f64) {
    let i = slot as usize;
    if i >= v.len() {
        v.resize(i + 1, f64::NAN);
    }
    v[i] = x;
}
