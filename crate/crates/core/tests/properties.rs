mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tubenav::control::{control_input, normalized_error};
use tubenav::harness::{plan, PlanOverrides};
use tubenav::negotiation::verify_disjointness;
use tubenav::simulation::{Disturbance, DisturbanceProcess, DisturbanceSpec};
use tubenav::tubes::verify_tube;

fn funnel() -> impl Strategy<Value = (f64, f64, f64)> {
    (-50.0..50.0f64, 0.01..20.0f64, 0.001..0.999f64).prop_map(|(lo, w, s)| (lo, lo + w, lo + s * w))
}

proptest! {
    #[test]
    fn input_points_back_to_the_centre((lo, hi, x) in funnel(), kappa in 0.01..10.0f64) {
        let u = control_input(x, lo, hi, kappa).unwrap();
        let c = 0.5 * (lo + hi);
        prop_assert!(u.is_finite());
        prop_assert!(u * (x - c) <= 0.0);
    }

    #[test]
    fn normalized_error_stays_open((lo, hi, x) in funnel()) {
        let e = normalized_error(x, lo, hi).unwrap();
        prop_assert!(e > -1.0 && e < 1.0);
    }

    #[test]
    fn outside_the_funnel_is_an_error(lo in -10.0..10.0f64, w in 0.1..5.0f64, out in 0.0..5.0f64) {
        prop_assert!(control_input(lo - out, lo, lo + w, 1.0).is_err());
        prop_assert!(control_input(lo + w + out, lo, lo + w, 1.0).is_err());
    }

    #[test]
    fn gain_scales_the_input_linearly((lo, hi, x) in funnel(), kappa in 0.01..10.0f64) {
        let one = control_input(x, lo, hi, 1.0).unwrap();
        let scaled = control_input(x, lo, hi, kappa).unwrap();
        prop_assert!((scaled - kappa * one).abs() <= 1e-12 * one.abs().max(1.0) * kappa.max(1.0));
    }

    #[test]
    fn disturbance_samples_respect_the_bound(
        d_max in prop::collection::vec(0.0..3.0f64, 1..4),
        seed in any::<u64>(),
        process in prop_oneof![
            Just(DisturbanceProcess::Uniform),
            Just(DisturbanceProcess::TruncatedNormal),
            Just(DisturbanceProcess::ConstantBias),
        ],
    ) {
        let spec = DisturbanceSpec { d_max: d_max.clone(), seed, process };
        let mut d = Disturbance::new(&spec, 3);
        let mut out = vec![0.0; d_max.len()];
        for _ in 0..200 {
            d.sample(&mut out);
            for (v, b) in out.iter().zip(&d_max) {
                prop_assert!(v.abs() <= *b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_plans_are_valid_and_disjoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = common::random_scenario(&mut rng, 0);
        // Infeasible draws are reported as errors, never as invalid plans.
        if let Ok(p) = plan(&sc, &PlanOverrides::default()) {
            let dt = sc.horizon() / 1e4;
            for (a, t) in sc.agents.iter().zip(p.tubes()) {
                let r = verify_tube(&t, &a.start, &a.target, &a.arena, &a.obstacles, dt).unwrap();
                prop_assert!(r.all_ok(), "agent {}: {:?}", a.id, r);
            }
            let masks: Vec<Vec<usize>> = sc.agents.iter().map(|a| a.workspace_mask.clone()).collect();
            prop_assert!(verify_disjointness(&p.tubes(), &masks, dt).unwrap().is_clean());
        }
    }
}
