//! Property tests for the invariants that hold across the whole crate.

use std::sync::Arc;

use proptest::prelude::*;

use uavd2d::allocation::{
    allocate_direct_using, allocate_greedy_using, allocate_with_relays_using, build_weights, hungarian_max,
    verify_state, GreedyVariant,
};
use uavd2d::channel::FadingSpec;
use uavd2d::metrics::{build_piecewise, default_delta, FblParams};
use uavd2d::outage::{outage, outage_ln, outage_nl, OutagePair};
use uavd2d::power::{optimal_power_pair, CellularQos, PairProblem, PowerBounds, PowerPair};
use uavd2d::scenario::{generate, ScenarioConfig};

fn fading() -> impl Strategy<Value = FadingSpec> {
    prop_oneof![
        (1u32..=4).prop_map(|m| FadingSpec::Nlos { m }),
        (0.0f64..30.0).prop_map(|k| FadingSpec::Los { k }),
    ]
}

fn weights(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
    prop::collection::vec(prop::collection::vec(prop::option::weighted(0.7, 0.0f64..10.0), m), n)
}

fn total(w: &[Vec<Option<f64>>], a: &[Option<usize>]) -> f64 {
    a.iter().enumerate().filter_map(|(r, c)| c.and_then(|c| w[r][c])).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hungarian_total_scales_with_weights(w in (1usize..6, 1usize..7).prop_flat_map(|(n, m)| weights(n, m)), c in 0.1f64..50.0) {
        let base = total(&w, &hungarian_max(&w));
        let scaled: Vec<Vec<Option<f64>>> = w.iter().map(|r| r.iter().map(|x| x.map(|v| v * c)).collect()).collect();
        let a = hungarian_max(&scaled);
        prop_assert!((total(&scaled, &a) - c * base).abs() <= 1e-9 * (1.0 + c * base));
        // One-to-one and only on present entries.
        let mut used = vec![false; w[0].len()];
        for (r, col) in a.iter().enumerate() {
            if let Some(col) = *col {
                prop_assert!(scaled[r][col].is_some());
                prop_assert!(!used[col]);
                used[col] = true;
            }
        }
    }

    #[test]
    fn outage_is_a_monotone_probability(main in fading(), intf in fading(), a in -3.0f64..3.0, step in 0.01f64..1.0) {
        let pair = OutagePair::new(main, intf).unwrap();
        let lo = outage(10f64.powf(a), &pair).unwrap();
        let hi = outage(10f64.powf(a + step), &pair).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi >= lo - 1e-12, "{lo} > {hi}");
    }

    #[test]
    fn mixed_kernels_are_complementary(a in -2.0f64..2.0, m in 1u32..=5, k in 0.0f64..40.0) {
        let a = 10f64.powf(a);
        let s = outage_nl(a, m, k).unwrap() + outage_ln(1.0 / a, k, m).unwrap();
        prop_assert!((s - 1.0).abs() <= 1e-9, "sum {s}");
    }

    #[test]
    fn config_text_round_trips(
        height in 50.0f64..700.0,
        p_eps in -7.0f64..-2.0,
        k_tilde in -7.0f64..0.0,
        mc in 1usize..30,
        md in 1usize..15,
        cells in 0usize..=6,
        los: bool,
        seed: u64,
    ) {
        let mut c = ScenarioConfig::default();
        c.uav_height = height;
        c.p_eps = 10f64.powf(p_eps);
        c.k_tilde = 10f64.powf(k_tilde);
        c.num_cellular = mc;
        c.num_d2d = md;
        c.intercell_cells = cells;
        c.intercell_los = los;
        c.seed = seed;
        let back = ScenarioConfig::parse(&c.to_text()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn powers_scale_with_the_boxes(k1 in -4.0f64..-1.0, k2 in -5.0f64..0.0, fi in -7.0f64..-3.0, fj in -7.0f64..-3.0, c in 0.1f64..10.0) {
        let approx = Arc::new(build_piecewise(4, default_delta(4), &FblParams::default()).unwrap());
        let make = |s: f64| PairProblem {
            k1: 10f64.powf(k1),
            k2: 10f64.powf(k2),
            qos: CellularQos { interferer: FadingSpec::Nlos { m: 2 }, m_cell: 2, rate_min: 2.0, p_eps: 1e-4, approx: approx.clone() },
            d2d: OutagePair::new(FadingSpec::Los { k: 15.85 }, FadingSpec::Nlos { m: 2 }).unwrap(),
            bounds_i: PowerBounds::new(s * 10f64.powf(fi), s * 0.1).unwrap(),
            bounds_j: PowerBounds::new(s * 10f64.powf(fj), s * 0.1).unwrap(),
        };
        match (optimal_power_pair(&make(1.0)).unwrap(), optimal_power_pair(&make(c)).unwrap()) {
            (PowerPair::Infeasible, PowerPair::Infeasible) => {}
            (PowerPair::Feasible { p_i: a, p_j: b, .. }, PowerPair::Feasible { p_i: sa, p_j: sb, .. }) => {
                prop_assert!((sa / (c * a) - 1.0).abs() < 1e-6);
                prop_assert!((sb / (c * b) - 1.0).abs() < 1e-6);
            }
            (x, y) => prop_assert!(false, "feasibility changed under scaling: {x:?} vs {y:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn realizations_have_noise_limited_floors(seed: u64, cells in 0usize..=6, los: bool) {
        let c = ScenarioConfig { intercell_cells: cells, intercell_los: los, ..ScenarioConfig::default() };
        let net = generate(&c, seed).unwrap();
        prop_assert!(net.bs_floor >= c.noise_power);
        prop_assert!(net.rx_floor.iter().all(|&f| f >= c.noise_power));
        prop_assert!(net.relays.iter().all(|r| r.floor >= c.noise_power));
    }

    #[test]
    fn allocators_produce_consistent_states(seed: u64, mc in 2usize..10, md in 1usize..6) {
        let c = ScenarioConfig { num_cellular: mc, num_d2d: md, ..ScenarioConfig::default() };
        let net = generate(&c, seed).unwrap();
        let t = build_weights(&net);
        let alg1 = allocate_direct_using(&net, &t);
        let alg2 = allocate_with_relays_using(&net, &t);
        for s in [&alg1, &alg2, &allocate_greedy_using(&net, &t, GreedyVariant::Greedy1), &allocate_greedy_using(&net, &t, GreedyVariant::Greedy2)] {
            let v = verify_state(&net, s, 1e-6).unwrap();
            prop_assert!(v.is_empty(), "{v:?}");
            prop_assert!(s.sum_rate >= alg1.sum_rate - 1e-9);
        }
        prop_assert!((0.0..=1.0).contains(&alg2.relayed_rate_ratio()));
    }
}
