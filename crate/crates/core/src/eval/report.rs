use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{EvalError, InstanceResult};
use crate::moe::{select_mixture, selection_csv, ExpertCoverage, SelectionRound};

/// Per-expert solved sets from the `expert:<id>` rows of a results table, in
/// id order.
pub fn coverage_from_results(rows: &[InstanceResult]) -> Vec<ExpertCoverage> {
    let mut by_id: BTreeMap<&str, ExpertCoverage> = BTreeMap::new();
    for r in rows {
        let Some(id) = r.policy.strip_prefix("expert:") else {
            continue;
        };
        let cov = by_id.entry(id).or_insert_with(|| ExpertCoverage {
            expert_id: id.to_string(),
            solved: BTreeMap::new(),
        });
        if r.solved {
            cov.solved.insert((r.n, r.k, r.seed), r.steps as u64);
        }
    }
    by_id.into_values().collect()
}

/// Greedy selection order over the experts in `rows`, up to `max_size`
/// rounds (fewer when there are fewer experts), and its CSV rendering.
pub fn selection_report(
    rows: &[InstanceResult],
    max_size: usize,
) -> Result<(Vec<SelectionRound>, String), EvalError> {
    let table = coverage_from_results(rows);
    if table.is_empty() {
        return Err(EvalError::InvalidConfig(
            "results contain no expert rows".into(),
        ));
    }
    let rounds = select_mixture(&table, max_size.min(table.len()))?;
    let csv = selection_csv(&rounds);
    Ok((rounds, csv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub policy: String,
    pub solved: usize,
    pub total_steps: usize,
    pub total_ms: f64,
}

impl TimingRow {
    pub fn mean_ms(&self) -> Option<f64> {
        (self.solved > 0).then(|| self.total_ms / self.solved as f64)
    }

    pub fn mean_steps(&self) -> f64 {
        if self.solved == 0 {
            0.0
        } else {
            self.total_steps as f64 / self.solved as f64
        }
    }

    pub fn ms_per_step(&self) -> Option<f64> {
        (self.total_steps > 0).then(|| self.total_ms / self.total_steps as f64)
    }
}

/// Aggregates over the solved rows of each policy, in policy order.
pub fn timing_rows(rows: &[InstanceResult]) -> Vec<TimingRow> {
    let mut by_policy: BTreeMap<&str, TimingRow> = BTreeMap::new();
    for r in rows {
        let t = by_policy.entry(&r.policy).or_insert_with(|| TimingRow {
            policy: r.policy.clone(),
            solved: 0,
            total_steps: 0,
            total_ms: 0.0,
        });
        if r.solved {
            t.solved += 1;
            t.total_steps += r.steps;
            t.total_ms += r.wall_time_ms;
        }
    }
    by_policy.into_values().collect()
}

/// CSV `policy,solved,mean_wall_time_ms,mean_steps,ms_per_step`; time fields
/// are blank for a policy without solved instances.
pub fn timing_report(rows: &[InstanceResult]) -> String {
    let mut out = String::from("policy,solved,mean_wall_time_ms,mean_steps,ms_per_step\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for t in timing_rows(rows) {
        writeln!(
            out,
            "{},{},{},{},{}",
            t.policy,
            t.solved,
            opt(t.mean_ms()),
            t.mean_steps(),
            opt(t.ms_per_step())
        )
        .expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(policy: &str, n: u32, solved: bool, steps: usize, ms: f64) -> InstanceResult {
        InstanceResult {
            policy: policy.into(),
            n,
            k: 1,
            seed: 0,
            solved,
            steps,
            return_value: -(steps as i64),
            wall_time_ms: ms,
            gating: None,
        }
    }

    #[test]
    fn timing_single_instance_and_degenerate() {
        let rows = [row("bfs", 1, true, 4, 2.0), row("dfs", 1, false, 10, 5.0)];
        let text = timing_report(&rows);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "bfs,1,2.000000,4,0.500000");
        assert_eq!(lines[2], "dfs,0,,0,");
    }

    #[test]
    fn selection_from_rows() {
        let mut rows = Vec::new();
        for n in 1..=5 {
            rows.push(row("expert:a", n, true, 3, 0.0));
        }
        for n in 6..=8 {
            rows.push(row("expert:b", n, true, 3, 0.0));
        }
        rows.push(row("expert:b", 1, false, 3, 0.0));
        rows.push(row("soft:a+b", 1, true, 3, 0.0));
        let (rounds, csv) = selection_report(&rows, 5).unwrap();
        assert_eq!(rounds.len(), 2);
        assert_eq!(
            csv,
            "round,expert_id,marginal_solved,cumulative_solved\n1,a,5,5\n2,b,3,8\n"
        );
        assert!(selection_report(&[row("bfs", 1, true, 1, 0.0)], 1).is_err());
    }
}
