use crate::synth::{ExplorationHistory, FrontierTransition, Verdict};
use crate::Scalar;

use super::PolicyError;

/// Version tag of the feature schema below. Checkpoints record it and are
/// rejected when it differs.
pub const FEATURE_VERSION: &str = "at-v1";

pub const FEATURE_DIM: usize = 12;

/// Features of one frontier transition, all in `[0, 1]`:
///
/// | idx | feature |
/// |-----|---------|
/// | 0 | label is controllable |
/// | 1 | target already discovered |
/// | 2 | target marked |
/// | 3 | target Winning |
/// | 4 | target Losing |
/// | 5 | fraction of components locally marked at target |
/// | 6 | source depth `d / (d + components)` |
/// | 7 | source is the target of the last expansion |
/// | 8 | uncontrollable share of the target's enabled set |
/// | 9 | target's enabled count over alphabet size |
/// | 10 | source's unexpanded share of its enabled set |
/// | 11 | bias, always 1 |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector<T: Scalar = f64>(pub [T; FEATURE_DIM]);

impl<T: Scalar> FeatureVector<T> {
    pub fn as_array(&self) -> &[T; FEATURE_DIM] {
        &self.0
    }
}

pub fn check_feature_version(version: &str) -> Result<(), PolicyError> {
    if version == FEATURE_VERSION {
        Ok(())
    } else {
        Err(PolicyError::FeatureVersion {
            found: version.to_string(),
            expected: FEATURE_VERSION,
        })
    }
}

fn flag<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

fn ratio<T: Scalar>(num: f64, den: f64) -> T {
    if den <= 0.0 {
        T::zero()
    } else {
        T::lit((num / den).clamp(0.0, 1.0))
    }
}

/// Computes the feature vector of a frontier transition without touching the
/// history.
pub fn extract_features<T: Scalar>(
    h: &ExplorationHistory<'_>,
    ft: &FrontierTransition,
) -> FeatureVector<T> {
    let sys = h.system();
    let target = ft.target;
    let source = ft.source;
    let verdict = h.verdict(target);
    let summary = h.enabled_summary(target);
    let depth = h.depth(source).unwrap_or(0) as f64;
    let components = sys.components().len() as f64;
    let src_enabled = h.enabled_summary(source).enabled as f64;
    FeatureVector([
        flag(sys.is_controllable(ft.label)),
        flag(h.is_discovered(target)),
        flag(h.is_marked(target)),
        flag(verdict == Verdict::Winning),
        flag(verdict == Verdict::Losing),
        T::lit(h.marked_fraction(target)),
        ratio(depth, depth + components),
        flag(h.last_expanded_target() == Some(source)),
        ratio(summary.uncontrollable as f64, summary.enabled as f64),
        ratio(summary.enabled as f64, sys.alphabet().len() as f64),
        ratio(h.pending_count(source) as f64, src_enabled),
        T::one(),
    ])
}

/// Features of the whole frontier, in frontier order.
pub fn frontier_features<T: Scalar>(h: &ExplorationHistory<'_>) -> Vec<FeatureVector<T>> {
    h.frontier().map(|ft| extract_features(h, ft)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::at::{build_at, AtParams};
    use crate::synth::tests::single;

    #[test]
    fn at_1_1_request_features() {
        let sys = build_at(AtParams::new(1, 1).unwrap()).unwrap();
        let h = ExplorationHistory::new(&sys);
        let ft = *h.frontier().next().unwrap();
        let f: FeatureVector = extract_features(&h, &ft);
        assert_eq!(f.0[0], 0.0);
        assert_eq!(f.0[1], 0.0);
        assert_eq!(f.0[11], 1.0);
        // the whole enabled set of s0 is still pending
        assert_eq!(f.0[10], 1.0);
    }

    #[test]
    fn marked_target_features() {
        let sys = single(2, &[1], &[("c", true)], &[(0, 0, 1)]);
        let h = ExplorationHistory::new(&sys);
        let ft = *h.frontier().next().unwrap();
        let f: FeatureVector<f32> = extract_features(&h, &ft);
        assert_eq!(f.0[2], 1.0);
        assert_eq!(f.0[5], 1.0);
        assert_eq!(f.0[0], 1.0);
        assert_eq!(f.0[8], 0.0);
    }

    #[test]
    fn version_check() {
        assert!(check_feature_version("at-v1").is_ok());
        assert!(matches!(
            check_feature_version("at-v0"),
            Err(PolicyError::FeatureVersion { .. })
        ));
    }
}
