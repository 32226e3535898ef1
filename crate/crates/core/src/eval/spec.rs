use std::fmt;
use std::str::FromStr;

use super::EvalError;
use crate::moe::MixMode;

/// A policy named on the command line or in a grid configuration:
/// `expert:<id>`, `soft:<id>+<id>...`, `hard:<id>+<id>...`, `random`, `bfs`
/// or `dfs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicySpec {
    Expert(String),
    Mixture { mode: MixMode, experts: Vec<String> },
    Random,
    Bfs,
    Dfs,
}

impl PolicySpec {
    /// Expert ids the policy needs.
    pub fn experts(&self) -> Vec<&str> {
        match self {
            PolicySpec::Expert(id) => vec![id],
            PolicySpec::Mixture { experts, .. } => experts.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl FromStr for PolicySpec {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || EvalError::InvalidSpec(s.to_string());
        match s {
            "random" => return Ok(PolicySpec::Random),
            "bfs" => return Ok(PolicySpec::Bfs),
            "dfs" => return Ok(PolicySpec::Dfs),
            _ => {}
        }
        let (kind, rest) = s.split_once(':').ok_or_else(invalid)?;
        match kind {
            "expert" if valid_id(rest) => Ok(PolicySpec::Expert(rest.to_string())),
            "soft" | "hard" => {
                let experts: Vec<String> = rest.split('+').map(str::to_string).collect();
                if !experts.iter().all(|e| valid_id(e)) {
                    return Err(invalid());
                }
                let mode = if kind == "soft" {
                    MixMode::Soft
                } else {
                    MixMode::Hard
                };
                Ok(PolicySpec::Mixture { mode, experts })
            }
            _ => Err(invalid()),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Expert(id) => write!(f, "expert:{id}"),
            PolicySpec::Mixture { mode, experts } => {
                let kind = match mode {
                    MixMode::Soft => "soft",
                    MixMode::Hard => "hard",
                };
                write!(f, "{kind}:{}", experts.join("+"))
            }
            PolicySpec::Random => f.write_str("random"),
            PolicySpec::Bfs => f.write_str("bfs"),
            PolicySpec::Dfs => f.write_str("dfs"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for s in [
            "expert:at_2_1",
            "soft:a+b+c",
            "hard:x",
            "random",
            "bfs",
            "dfs",
        ] {
            let p: PolicySpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        let p: PolicySpec = "soft:a+b".parse().unwrap();
        assert_eq!(p.experts(), ["a", "b"]);
    }

    #[test]
    fn rejects_malformed() {
        for s in ["", "expert:", "soft:a++b", "greedy", "expert:a b", "mix:a"] {
            assert!(s.parse::<PolicySpec>().is_err(), "{s}");
        }
    }
}
