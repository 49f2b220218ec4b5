//! Property tests for the module-level invariants.

use proptest::prelude::*;

/// Shared-state types are safe to hand across threads: islands are
/// immutable after registration, the analyzer is pure, and the router is
/// reentrant.
#[test]
fn shared_types_are_send_and_sync() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<islandrun::registry::Catalog>();
    assert_send_sync::<islandrun::registry::Island>();
    assert_send_sync::<islandrun::mist::Analyzer>();
    assert_send_sync::<islandrun::tide::TideMonitor>();
    assert_send_sync::<islandrun::waves::Router>();
    assert_send_sync::<islandrun::lighthouse::Lighthouse>();
}

use islandrun::mist::shared_analyzer;
use islandrun::registry::{compose_trust, TrustInputs, TrustMode};
use islandrun::tide::{compute_available, step_hysteresis, HysteresisState};
use islandrun::waves::Weights;

proptest! {
    /// Min composition never exceeds any component; product never exceeds
    /// the min composition; both stay in [0, 1].
    #[test]
    fn trust_composition_bounds(
        base in 0.0..=1.0f64,
        cert in 0.0..=1.0f64,
        jur in 0.0..=1.0f64,
    ) {
        let inputs = TrustInputs::new(base, cert, jur);
        let min = compose_trust(&inputs, TrustMode::Min).unwrap();
        let product = compose_trust(&inputs, TrustMode::Product).unwrap();
        for component in [base, cert, jur] {
            prop_assert!(min <= component + 1e-15);
            prop_assert!(product <= component + 1e-15);
        }
        prop_assert!(product <= min + 1e-15);
        prop_assert!((0.0..=1.0).contains(&min));
        prop_assert!((0.0..=1.0).contains(&product));
    }

    /// Appending a PII match to any benign prompt never decreases the score.
    #[test]
    fn stage1_scoring_is_monotone_under_added_pii(
        words in proptest::collection::vec("[a-z]{1,8}", 0..12),
    ) {
        let analyzer = shared_analyzer();
        let base_text = words.join(" ");
        let base = analyzer.analyze_sensitivity(&base_text).score;
        for pii in ["a@b.com", "123-45-6789", "(312) 555-0144"] {
            let extended = format!("{base_text} {pii}");
            let extended_score = analyzer.analyze_sensitivity(&extended).score;
            prop_assert!(
                extended_score >= base,
                "{extended:?}: {extended_score} < {base}"
            );
            prop_assert!(extended_score >= 0.8);
        }
    }

    /// Available capacity is antitone in each utilization dimension.
    #[test]
    fn capacity_is_antitone(
        cpu in 0.0..=100.0f64,
        gpu in 0.0..=100.0f64,
        used in 0u64..=1000,
        bump in 0.0..=50.0f64,
    ) {
        let total = 1000u64;
        let base = compute_available(cpu, gpu, used, total).unwrap();
        let cpu_up = (cpu + bump).min(100.0);
        prop_assert!(compute_available(cpu_up, gpu, used, total).unwrap() <= base);
        let gpu_up = (gpu + bump).min(100.0);
        prop_assert!(compute_available(cpu, gpu_up, used, total).unwrap() <= base);
        let used_up = (used + 100).min(total);
        prop_assert!(compute_available(cpu, gpu, used_up, total).unwrap() <= base);
    }

    /// Any trace confined to the open dead zone never changes mode.
    #[test]
    fn hysteresis_never_flaps_inside_dead_zone(
        offsets in proptest::collection::vec(0.0001..0.0999f64, 1..200),
    ) {
        let mut state = HysteresisState::default();
        let initial = state.mode;
        for offset in offsets {
            state = step_hysteresis(state, 0.70 + offset);
            prop_assert_eq!(state.mode, initial);
        }
    }

    /// Weights normalize to a unit simplex regardless of input scale.
    #[test]
    fn weights_normalize_to_unit_sum(
        cost in 0.0..100.0f64,
        latency in 0.0..100.0f64,
        privacy in 0.001..100.0f64,
    ) {
        let weights = Weights::new(cost, latency, privacy).unwrap();
        prop_assert!((weights.cost + weights.latency + weights.privacy - 1.0).abs() < 1e-9);
        prop_assert!(weights.cost >= 0.0 && weights.latency >= 0.0 && weights.privacy >= 0.0);
    }
}
