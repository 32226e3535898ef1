use dcs_moe::at::{build_at, AtParams};
use dcs_moe::policy::{frontier_features, FEATURE_DIM};
use dcs_moe::synth::ExplorationHistory;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_stay_in_the_unit_interval(n in 1u32..=4, k in 1u32..=4, seed in any::<u64>(), steps in 0usize..300) {
        let sys = build_at(AtParams::new(n, k).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = ExplorationHistory::new(&sys);
        for _ in 0..steps {
            if h.frontier_len() == 0 {
                break;
            }
            let pick = h.frontier_at(rng.gen_range(0..h.frontier_len())).unwrap();
            h.expand(pick).unwrap();
            for f in frontier_features::<f64>(&h) {
                let x = f.as_array();
                prop_assert_eq!(x.len(), FEATURE_DIM);
                prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)), "{:?}", x);
                prop_assert_eq!(x[FEATURE_DIM - 1], 1.0);
            }
        }
    }

    #[test]
    fn f32_and_f64_features_agree(n in 1u32..=3, k in 1u32..=3, seed in any::<u64>()) {
        let sys = build_at(AtParams::new(n, k).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = ExplorationHistory::new(&sys);
        for _ in 0..40 {
            if h.frontier_len() == 0 {
                break;
            }
            let a = frontier_features::<f64>(&h);
            let b = frontier_features::<f32>(&h);
            for (x, y) in a.iter().zip(&b) {
                for (p, q) in x.as_array().iter().zip(y.as_array()) {
                    prop_assert!((p - *q as f64).abs() < 1e-6);
                }
            }
            let pick = h.frontier_at(rng.gen_range(0..h.frontier_len())).unwrap();
            h.expand(pick).unwrap();
        }
    }
}
