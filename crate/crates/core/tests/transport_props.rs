mod common;

use common::*;
use proptest::prelude::*;
use wpd_core::transport::{
    dilate, oracle_wasserstein_discrete, oracle_wasserstein_uniform, rational_approx, uniformize, wasserstein,
    wasserstein_uniform, DiscreteMeasure,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn uniform_matches_permutation_oracle((a, b) in uniform_pair(7), p in p_value()) {
        let fast = wasserstein_uniform(&a, &b, p).unwrap();
        let slow = oracle_wasserstein_uniform(&a, &b, p).unwrap();
        prop_assert!(rel_close(fast, slow, 1e-9), "{fast} vs {slow}");
    }

    #[test]
    fn metric_axioms(
        a in rational_measure(4, 12),
        b in rational_measure(4, 12),
        c in rational_measure(4, 12),
        p in p_value(),
    ) {
        let ab = wasserstein(&a, &b, p).unwrap().distance;
        let ba = wasserstein(&b, &a, p).unwrap().distance;
        let bc = wasserstein(&b, &c, p).unwrap().distance;
        let ac = wasserstein(&a, &c, p).unwrap().distance;
        prop_assert_eq!(ab, ba);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert_eq!(wasserstein(&a, &a, p).unwrap().distance, 0.0);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn coupling_has_the_right_marginals(a in rational_measure(5, 12), b in rational_measure(5, 12), p in p_value()) {
        let t = wasserstein(&a, &b, p).unwrap();
        prop_assert!(t.coupling.marginal_error(&a.real_weights(), &b.real_weights()) <= 1e-9);
        let cost: f64 = t
            .coupling
            .plan
            .iter()
            .map(|&(i, j, m)| m * a.atoms()[i].linf_dist(&b.atoms()[j]).powf(p))
            .sum();
        prop_assert!(rel_close(cost, t.coupling.cost, 1e-9));
        prop_assert!(rel_close(cost.powf(1.0 / p), t.distance, 1e-9));
    }

    #[test]
    fn translation_invariance(
        a in rational_measure(4, 12),
        b in rational_measure(4, 12),
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
        p in p_value(),
    ) {
        let d = wasserstein(&a, &b, p).unwrap().distance;
        let moved = wasserstein(&a.translate(dx, dy), &b.translate(dx, dy), p).unwrap().distance;
        prop_assert!((d - moved).abs() <= 1e-9 * d.max(1.0), "{d} vs {moved}");
    }

    #[test]
    fn dilation_homogeneity(a in rational_measure(4, 12), b in rational_measure(4, 12), r in 0.01f64..100.0, p in p_value()) {
        let d = wasserstein(&a, &b, p).unwrap().distance;
        let scaled = wasserstein(&dilate(&a, r).unwrap(), &dilate(&b, r).unwrap(), p).unwrap().distance;
        prop_assert!(rel_close(scaled, r * d, 1e-9), "{scaled} vs {}", r * d);
    }

    #[test]
    fn uniformize_preserves_distance(a in rational_measure(4, 6), b in rational_measure(4, 6), p in p_value()) {
        let (ua, ub) = (uniformize(&a).unwrap(), uniformize(&b).unwrap());
        prop_assume!(ua.len() == ub.len());
        let direct = wasserstein(&a, &b, p).unwrap().distance;
        prop_assert!(rel_close(direct, wasserstein_uniform(&ua, &ub, p).unwrap(), 1e-9));
    }

    #[test]
    fn rational_measures_agree_with_the_discrete_oracle(a in rational_measure(4, 10), b in rational_measure(4, 10), p in p_value()) {
        let exact = wasserstein(&a, &b, p).unwrap().distance;
        let oracle = oracle_wasserstein_discrete(&a, &b, p).unwrap();
        prop_assert!(rel_close(exact, oracle, 1e-9), "{exact} vs {oracle}");
    }

    #[test]
    fn rational_approx_respects_its_bound(m in real_measure(5), n in 1u64..200, p in p_value()) {
        let approx = rational_approx(&m, n).unwrap();
        let w: Vec<_> = approx.measure.weights().iter().map(|w| w.to_f64()).collect();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let actual = oracle_wasserstein_discrete(&m, &approx.measure, p).unwrap();
        prop_assert!(actual <= approx.error_bound(p) + 1e-9, "{actual} > {}", approx.error_bound(p));
    }

    #[test]
    fn approximating_a_rational_measure_by_its_denominator_is_exact(m in rational_measure(4, 12)) {
        let n = m.common_denominator(1_000_000).unwrap();
        let approx = rational_approx(&m, n).unwrap();
        prop_assert_eq!(approx.moved_mass, 0.0);
        prop_assert_eq!(approx.measure, m);
    }
}

#[test]
fn irrational_weights_are_refused_without_approximation() {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let a = DiscreteMeasure::from_reals(
        vec![wpd_core::geometry::PlanePoint::new(0.0, 0.0).unwrap(), wpd_core::geometry::PlanePoint::new(1.0, 0.0).unwrap()],
        vec![w, 1.0 - w],
    )
    .unwrap();
    let err = wasserstein(&a, &a, 1.0).unwrap_err();
    assert!(err.to_string().contains("rational_approx"), "{err}");
}
