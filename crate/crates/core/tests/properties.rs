//! Randomized property tests for the algebraic invariants that the unit
//! tests only check pointwise.

use lamdrl::agent::AttentionLayer;
use lamdrl::allocators::{equal_allocation, max_min_fairness, water_filling, ChannelSnapshot};
use lamdrl::harness::summary::moving_average;
use lamdrl::kpi::{jain, outage};
use lamdrl::strategy::{parse_label, StrategyLabel};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn snapshot(gains: Vec<f64>, budget: Option<f64>) -> ChannelSnapshot {
    let n = gains.len();
    ChannelSnapshot {
        gains,
        noise_floor: vec![1e-13; n],
        p_max_dbm: 40.0,
        b_max_hz: 20e6,
        budget_watts: budget,
    }
}

proptest! {
    /// Jain's index lies in [1/n, 1] and is invariant to positive scaling.
    #[test]
    fn jain_bounds_and_scale_invariance(
        rates in prop::collection::vec(1e3f64..1e9, 1..16),
        scale in 1e-6f64..1e6,
    ) {
        let j = jain(&rates);
        let n = rates.len() as f64;
        prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0 + 1e-12);

        let scaled: Vec<f64> = rates.iter().map(|r| r * scale).collect();
        prop_assert!((jain(&scaled) - j).abs() < 1e-9);
    }

    /// Equal rates give Jain = 1 exactly up to rounding.
    #[test]
    fn jain_of_constant_vector_is_one(r in 1.0f64..1e9, n in 1usize..32) {
        let rates = vec![r; n];
        prop_assert!((jain(&rates) - 1.0).abs() < 1e-12);
    }

    /// Outage is a fraction in [0, 1] and monotone in the threshold.
    #[test]
    fn outage_is_monotone_fraction(
        sinrs in prop::collection::vec(1e-3f64..1e3, 1..16),
        t1 in 1e-2f64..1e2,
        t2 in 1e-2f64..1e2,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let o_lo = outage(&sinrs, lo);
        let o_hi = outage(&sinrs, hi);
        prop_assert!((0.0..=1.0).contains(&o_lo));
        prop_assert!(o_lo <= o_hi);
    }

    /// Every heuristic stays within per-user caps and (where applicable)
    /// the total power budget.
    #[test]
    fn allocations_respect_caps_and_budget(
        gains in prop::collection::vec(1e-20f64..1e-12, 2..8),
        budget_frac in 0.1f64..1.0,
    ) {
        let uncapped = snapshot(gains.clone(), None);
        let p_cap = uncapped.p_cap_watts();
        let n = gains.len() as f64;
        let budget = budget_frac * n * p_cap;
        let capped = snapshot(gains, Some(budget));

        let eq = equal_allocation(&uncapped).unwrap();
        for u in 0..eq.num_users() {
            prop_assert!(eq.power_watts(u) <= p_cap * (1.0 + 1e-12));
            prop_assert!(eq.bandwidth_hz(u) <= 20e6 * (1.0 + 1e-12));
        }

        let wf = water_filling(&capped, budget).unwrap();
        let total: f64 = (0..wf.allocation.num_users())
            .map(|u| wf.allocation.power_watts(u))
            .sum();
        prop_assert!(total <= budget * (1.0 + 1e-9));
        for u in 0..wf.allocation.num_users() {
            prop_assert!(wf.allocation.power_watts(u) <= p_cap * (1.0 + 1e-9));
        }

        let mmf = max_min_fairness(&capped, budget).unwrap();
        let total: f64 = (0..mmf.num_users()).map(|u| mmf.power_watts(u)).sum();
        prop_assert!(total <= budget * (1.0 + 1e-9));
    }

    /// Label parsing tolerates surrounding prose and never panics on
    /// arbitrary input; a standalone uppercase letter is always found.
    #[test]
    fn parse_label_total_and_finds_standalone_letters(
        s in ".*",
        prefix in "([a-z :,.]{0,20}[ :,.])?",
        suffix in "([ :,.][a-z :,.]{0,20})?",
        idx in 0usize..4,
    ) {
        let _ = parse_label(&s); // must not panic
        let want = StrategyLabel::from_index(idx);
        let letter = ["A", "B", "C", "D"][idx];
        let text = format!("{prefix}{letter}{suffix}");
        prop_assert_eq!(parse_label(&text), Some(want));
    }

    /// Attention weights form a probability simplex for any inputs.
    #[test]
    fn attention_weights_on_simplex(
        seed in any::<u64>(),
        n in 2usize..12,
        scale in 0.01f64..10.0,
    ) {
        let d_f = 13;
        let d_str = 16;
        let mut rng = lamdrl::seeds::rng(seed, &[lamdrl::seeds::stream::NETWORK_INIT]);
        let layer = AttentionLayer::new(32, d_f, d_str, &mut rng);
        let features = Array2::from_shape_fn((n, d_f), |(i, j)| {
            scale * (((i * 31 + j * 7) % 13) as f64 / 13.0 - 0.5)
        });
        let e = Array1::from_shape_fn(d_str, |i| scale * ((i as f64 / 16.0) - 0.4));
        let (_, cache) = layer.forward(&features.view(), &e.view());
        let sum: f64 = cache.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(cache.weights.iter().all(|w| *w >= 0.0));
    }

    /// The trailing moving average of any series stays within its range.
    #[test]
    fn moving_average_within_range(
        values in prop::collection::vec(-1e6f64..1e6, 1..64),
        window in 1usize..12,
    ) {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ma = moving_average(&values, window);
        prop_assert_eq!(ma.len(), values.len());
        for v in ma {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }
}
