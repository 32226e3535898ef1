use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MoeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub n: u32,
    pub k: u32,
    pub steps: u64,
}

/// Solved instances of one expert, one record per `(n, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryDataset {
    pub expert_id: String,
    /// Sorted by `(n, k)`.
    pub records: Vec<HistoryRecord>,
}

impl HistoryDataset {
    /// Keeps the fewest steps seen for each `(n, k)`.
    pub fn from_runs(
        expert_id: impl Into<String>,
        runs: impl IntoIterator<Item = HistoryRecord>,
    ) -> Self {
        let mut best: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for r in runs {
            best.entry((r.n, r.k))
                .and_modify(|s| *s = (*s).min(r.steps))
                .or_insert(r.steps);
        }
        let records = best
            .into_iter()
            .map(|((n, k), steps)| HistoryRecord { n, k, steps })
            .collect();
        Self {
            expert_id: expert_id.into(),
            records,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV `n,k,steps`; the header is written even when there are no records.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(["n", "k", "steps"])
            .expect("in-memory write");
        for r in &self.records {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    pub fn from_csv(expert_id: impl Into<String>, text: &str) -> Result<Self, MoeError> {
        let mut rows = Vec::new();
        for row in csv::Reader::from_reader(text.as_bytes()).deserialize() {
            rows.push(row.map_err(|e| MoeError::Dataset(e.to_string()))?);
        }
        Ok(Self::from_runs(expert_id, rows))
    }

    pub fn save(&self, path: &Path) -> Result<(), MoeError> {
        std::fs::write(path, self.to_csv()).map_err(|e| MoeError::io(path, e))
    }

    pub fn load(expert_id: impl Into<String>, path: &Path) -> Result<Self, MoeError> {
        let text = std::fs::read_to_string(path).map_err(|e| MoeError::io(path, e))?;
        Self::from_csv(expert_id, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_minimum_per_cell() {
        let r = |n, k, steps| HistoryRecord { n, k, steps };
        let d = HistoryDataset::from_runs("e", [r(2, 1, 30), r(1, 1, 4), r(2, 1, 25), r(2, 1, 40)]);
        assert_eq!(d.records, vec![r(1, 1, 4), r(2, 1, 25)]);
    }

    #[test]
    fn csv_round_trip_and_empty_header() {
        let empty = HistoryDataset::from_runs("e", []);
        assert_eq!(empty.to_csv(), "n,k,steps\n");
        let d = HistoryDataset::from_runs(
            "e",
            [HistoryRecord {
                n: 1,
                k: 1,
                steps: 4,
            }],
        );
        assert_eq!(d.to_csv(), "n,k,steps\n1,1,4\n");
        assert_eq!(HistoryDataset::from_csv("e", &d.to_csv()).unwrap(), d);
        assert_eq!(
            HistoryDataset::from_csv("e", &empty.to_csv()).unwrap(),
            empty
        );
        assert!(HistoryDataset::from_csv("e", "n,k,steps\n1,x,4\n").is_err());
    }
}
