mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weights_form_a_distribution(seed in any::<u64>()) {
        common::normalization(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn permuting_experts_permutes_weights(seed in any::<u64>()) {
        common::permutation(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn weights_are_monotone_in_signals(seed in any::<u64>()) {
        common::monotonicity(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn gate_is_fixed_for_the_episode(seed in any::<u64>()) {
        common::temporal_fixity(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn dominant_soft_gate_matches_hard(seed in any::<u64>()) {
        common::soft_hard_limit(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn kernel_peaks_at_the_query(seed in any::<u64>()) {
        common::kernel(seed).map_err(TestCaseError::fail)?;
    }
}
