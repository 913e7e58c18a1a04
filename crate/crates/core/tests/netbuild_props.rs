mod common;

use common::random_slice;
use finnet_core::netbuild::{threshold_a, threshold_b};
use finnet_core::seed::rng_from_seed;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rule_a_ignores_uniform_scaling(seed in any::<u64>(), n in 2usize..15, c in 1e-3f64..1e3) {
        let s = random_slice(n, 0.5, &mut rng_from_seed(seed));
        let scaled = s.with_holdings(s.holdings().iter().map(|v| v * c).collect()).unwrap();
        prop_assert_eq!(threshold_a(&s).to_adjacency(), threshold_a(&scaled).to_adjacency());
    }

    #[test]
    fn rule_b_ignores_joint_scaling(seed in any::<u64>(), n in 2usize..15, c in 1e-3f64..1e3) {
        let s = random_slice(n, 0.5, &mut rng_from_seed(seed));
        let m: Vec<f64> = s.holdings().iter().map(|v| v * c).collect();
        let g: Vec<f64> = s.gdp().iter().map(|v| v * c).collect();
        let scaled = finnet_core::AssetSlice::new(s.year, s.countries().to_vec(), m, g).unwrap();
        prop_assert_eq!(
            threshold_b(&s, 0.0417).unwrap().to_adjacency(),
            threshold_b(&scaled, 0.0417).unwrap().to_adjacency()
        );
    }

    #[test]
    fn rule_b_is_monotone_in_threshold(seed in any::<u64>(), t in 1e-4f64..1.0, dt in 0.0f64..1.0) {
        let s = random_slice(12, 0.6, &mut rng_from_seed(seed));
        let loose = threshold_b(&s, t).unwrap();
        let tight = threshold_b(&s, t + dt).unwrap();
        for (i, j) in tight.edges() {
            prop_assert!(loose.has_edge(i, j));
        }
    }

    #[test]
    fn rule_a_out_edges_follow_row_spread(seed in any::<u64>(), n in 3usize..12) {
        let s = random_slice(n, 0.6, &mut rng_from_seed(seed));
        let net = threshold_a(&s);
        for i in 0..n {
            let vals: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| s.holding(i, j)).collect();
            let distinct = vals.iter().any(|&v| v != vals[0]);
            if distinct {
                prop_assert!(net.out_degree(i) >= 1);
            } else {
                prop_assert_eq!(net.out_degree(i), 0);
            }
        }
    }
}
