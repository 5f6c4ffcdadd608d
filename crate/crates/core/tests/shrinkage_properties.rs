use proptest::prelude::*;
use tlp_core::estimators::LpMoments;
use tlp_core::shrinkage::{
    default_lambda_grid, limit_weight, optimal_weight, slp_select_lambda, slp_ure, tlp_risk, TripleAt,
};

fn triple() -> impl Strategy<Value = TripleAt<f64>> {
    (0.01f64..10.0, 0.01f64..10.0, -0.999f64..0.999)
        .prop_map(|(lp, var, rho)| TripleAt::new(lp, var, rho * (lp * var).sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn weight_beats_every_grid_point(delta in -2.0f64..2.0, t in 10usize..5000, tri in triple()) {
        let w = optimal_weight(delta, t, &tri);
        prop_assert!((0.0..=1.0).contains(&w.v));
        let best = tlp_risk(w.v, delta, t, &tri);
        for g in 0..=200 {
            let v = g as f64 / 200.0;
            prop_assert!(best <= tlp_risk(v, delta, t, &tri) + 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn risk_is_convex_for_admissible_triples(
        delta in -2.0f64..2.0, t in 10usize..5000, tri in triple(), a in 0.0f64..1.0, b in 0.0f64..1.0,
    ) {
        let mid = tlp_risk(0.5 * (a + b), delta, t, &tri);
        let chord = 0.5 * (tlp_risk(a, delta, t, &tri) + tlp_risk(b, delta, t, &tri));
        prop_assert!(mid <= chord + 1e-9 * chord.abs().max(1.0));
    }

    #[test]
    fn weight_is_scale_invariant(delta in -2.0f64..2.0, t in 10usize..5000, tri in triple(), c in 0.01f64..100.0) {
        let w = optimal_weight(delta, t, &tri);
        // Scaling every variance and the squared gap by c leaves the ratio alone.
        let scaled = optimal_weight(delta * c.sqrt(), t, &tri.scaled(c));
        prop_assert!((w.v - scaled.v).abs() <= 1e-9);
    }

    #[test]
    fn limit_weight_matches_feasible_weight_at_unit_sample(abias in -3.0f64..3.0, tri in triple()) {
        prop_assert_eq!(limit_weight(abias, &tri).v, optimal_weight(abias, 1, &tri).v);
    }

    #[test]
    fn ure_selection_is_grid_minimum(
        xtx in proptest::collection::vec(50.0f64..300.0, 5..12),
        noise in proptest::collection::vec(-1.0f64..1.0, 12),
        sigma in proptest::collection::vec(0.1f64..5.0, 12),
    ) {
        let h = xtx.len();
        let xty: Vec<f64> = xtx.iter().enumerate().map(|(i, x)| x * (0.8f64.powi(i as i32) + 0.2 * noise[i])).collect();
        let moments = LpMoments { xtx: xtx.clone(), xty, n_obs: vec![200; h] };
        let lp = moments.beta();
        let grid = default_lambda_grid(&moments);
        let (lambda, risk) = slp_select_lambda(&lp, &moments, &sigma[..h], 200, &grid).unwrap();
        prop_assert!(grid.contains(&lambda));
        for &g in &grid {
            prop_assert!(risk <= slp_ure(&lp, &moments, &sigma[..h], 200, g).unwrap());
        }
    }
}
