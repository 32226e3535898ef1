use crate::des::{CompositeState, CompositeSystem, ExplicitGraph, StateCapExceeded};

use super::Verdict;

/// Exact verdicts on the fully enumerated composition.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub graph: ExplicitGraph,
    /// Per graph state: verdict and, for Winning states, the fixpoint round in
    /// which it was classified.
    pub verdicts: Vec<(Verdict, Option<u32>)>,
}

impl OracleSolution {
    pub fn get(&self, q: &CompositeState) -> Option<(Verdict, Option<u32>)> {
        self.graph.index.get(q).map(|&i| self.verdicts[i])
    }

    pub fn initial(&self) -> (Verdict, Option<u32>) {
        self.verdicts[0]
    }

    pub fn losing_count(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| v.0 == Verdict::Losing)
            .count()
    }
}

/// Monolithic attractor computation. Round 0 is the marked set; in round `r`
/// a state joins if it has uncontrollable transitions all leading to earlier
/// rounds, or has none and some controllable transition leads to an earlier
/// round. Everything outside the fixpoint is Losing.
pub fn oracle_solve(sys: &CompositeSystem, cap: usize) -> Result<OracleSolution, StateCapExceeded> {
    let graph = ExplicitGraph::enumerate(sys, cap)?;
    let n = graph.states.len();
    let mut rank: Vec<Option<u32>> = graph
        .states
        .iter()
        .map(|q| sys.is_marked(q).then_some(0))
        .collect();
    let mut round = 0u32;
    loop {
        round += 1;
        let won_before = |t: usize| rank[t].is_some_and(|r| r < round);
        let mut joined = Vec::new();
        for s in 0..n {
            if rank[s].is_some() {
                continue;
            }
            let edges = &graph.edges[s];
            let mut unc = edges
                .iter()
                .filter(|(l, _)| !sys.is_controllable(*l))
                .peekable();
            let wins = if unc.peek().is_some() {
                unc.all(|&(_, t)| won_before(t))
            } else {
                edges.iter().any(|&(_, t)| won_before(t))
            };
            if wins {
                joined.push(s);
            }
        }
        if joined.is_empty() {
            break;
        }
        for s in joined {
            rank[s] = Some(round);
        }
    }
    let verdicts = rank
        .into_iter()
        .map(|r| match r {
            Some(r) => (Verdict::Winning, Some(r)),
            None => (Verdict::Losing, None),
        })
        .collect();
    Ok(OracleSolution { graph, verdicts })
}
