mod common;

use common::grad::*;

#[test]
fn reinforce_equals_reward_weighted_cross_entropy() {
    for seed in 0..5 {
        let diff = reinforce_vs_ce(seed);
        assert!(diff <= 1e-12, "seed {seed}: {diff}");
    }
}

#[test]
fn constant_reward_expectation_vanishes() {
    for (seed, n) in [(0, 1), (1, 3), (2, 5), (3, 8)] {
        let norm = constant_reward_expectation(seed, n, 0.7);
        assert!(norm <= 1e-8, "seed {seed}, n {n}: {norm}");
    }
}
