use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::MoeError;

/// A benchmark instance: `(n, k, seed)`.
pub type InstanceKey = (u32, u32, u64);

/// Solved instances of one expert and the steps each took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertCoverage {
    pub expert_id: String,
    pub solved: BTreeMap<InstanceKey, u64>,
}

impl ExpertCoverage {
    pub fn total_steps(&self) -> u64 {
        self.solved.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionRound {
    pub round: usize,
    pub expert_id: String,
    pub marginal_solved: usize,
    pub cumulative_solved: usize,
}

/// Greedy set cover: each round adds the expert solving the most instances
/// not yet covered, preferring fewer total steps and then the smaller id.
pub fn select_mixture(table: &[ExpertCoverage], x: usize) -> Result<Vec<SelectionRound>, MoeError> {
    if table.is_empty() {
        return Err(MoeError::InvalidConfig("empty results table".into()));
    }
    if x > table.len() {
        return Err(MoeError::InvalidConfig(format!(
            "mixture size {x} exceeds the {} available experts",
            table.len()
        )));
    }
    let mut covered: BTreeSet<InstanceKey> = BTreeSet::new();
    let mut remaining: Vec<&ExpertCoverage> = table.iter().collect();
    let mut rounds = Vec::with_capacity(x);
    for round in 1..=x {
        let (pos, marginal) = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.solved.keys().filter(|k| !covered.contains(k)).count()))
            .min_by(|&(i, mi), &(j, mj)| {
                let (a, b) = (remaining[i], remaining[j]);
                mj.cmp(&mi)
                    .then(a.total_steps().cmp(&b.total_steps()))
                    .then(a.expert_id.cmp(&b.expert_id))
            })
            .expect("x never exceeds the table");
        let chosen = remaining.remove(pos);
        covered.extend(chosen.solved.keys().copied());
        rounds.push(SelectionRound {
            round,
            expert_id: chosen.expert_id.clone(),
            marginal_solved: marginal,
            cumulative_solved: covered.len(),
        });
    }
    Ok(rounds)
}

/// CSV `round,expert_id,marginal_solved,cumulative_solved`.
pub fn selection_csv(rounds: &[SelectionRound]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(["round", "expert_id", "marginal_solved", "cumulative_solved"])
        .expect("in-memory write");
    for r in rounds {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
