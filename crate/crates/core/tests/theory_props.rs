use proptest::prelude::*;
use spherical_mg::theory::{
    alpha_c1, alpha_c2, alpha_c2_via_c0, classify_phase, ergodic_solution, frozen_solution,
    persistent_correlation_closed_form, static_susceptibility, stationary_residuals,
    susceptibility_discriminant,
};
use spherical_mg::{ExternalBid, Phase};

fn drive() -> impl Strategy<Value = ExternalBid<f64>> {
    (0.0f64..3.0, any::<bool>()).prop_map(|(a, osc)| {
        if osc {
            ExternalBid::oscillating(a)
        } else {
            ExternalBid::fixed(a)
        }
    })
}

proptest! {
    #[test]
    fn ergodic_solution_solves_stationary_equations(kappa in 0.0f64..0.95, bid in drive(), stretch in 1e-3f64..5.0) {
        let alpha = alpha_c2(&bid, kappa).unwrap() * (1.0 + stretch);
        let theory = ergodic_solution(alpha, kappa, &bid).unwrap();
        for r in stationary_residuals(alpha, &bid, &theory).unwrap() {
            prop_assert!(r.abs() < 1e-9, "residual {r}");
        }
        let c0 = theory.c0.unwrap();
        prop_assert!(c0 > 0.0 && c0 < 1.0);
        prop_assert!(theory.lambda.unwrap() > 0.0);
    }

    #[test]
    fn susceptibility_is_a_root(alpha in 0.05f64..20.0, kappa in 1e-6f64..=1.0) {
        prop_assume!(susceptibility_discriminant(alpha, kappa) >= 0.0);
        let chi = static_susceptibility(alpha, kappa).unwrap();
        let residual = alpha * kappa * chi * chi + chi * (1.0 + alpha * (kappa - 1.0)) + 1.0;
        prop_assert!(residual.abs() < 1e-9 * (1.0 + chi * chi));
    }

    #[test]
    fn forbidden_window_has_no_finite_susceptibility(kappa in 0.01f64..0.9, u in 0.01f64..0.99) {
        let lo = 1.0 / (1.0 + kappa.sqrt()).powi(2);
        let hi = 1.0 / (1.0 - kappa.sqrt()).powi(2);
        let alpha = lo + u * (hi - lo);
        prop_assert!(susceptibility_discriminant(alpha, kappa) < 0.0);
        prop_assert!(static_susceptibility(alpha, kappa).is_err());
    }

    #[test]
    fn transition_routes_agree(kappa in 0.0f64..0.99, bid in drive()) {
        let a = alpha_c2(&bid, kappa).unwrap();
        let b = alpha_c2_via_c0(&bid, kappa).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn oscillating_drive_leaves_boundaries_alone(kappa in 0.0f64..1.0, amp in 0.0f64..10.0) {
        let bare = ExternalBid::none();
        let osc = ExternalBid::oscillating(amp);
        prop_assert_eq!(alpha_c1(&osc), alpha_c1(&bare));
        prop_assert_eq!(alpha_c2(&osc, kappa).unwrap(), alpha_c2(&bare, kappa).unwrap());
    }

    #[test]
    fn transition_increases_with_kappa(k1 in 0.0f64..0.98, dk in 1e-3f64..0.01, bid in drive()) {
        prop_assert!(alpha_c2(&bid, k1 + dk).unwrap() > alpha_c2(&bid, k1).unwrap());
    }

    #[test]
    fn phases_are_ordered(alpha in 0.01f64..40.0, kappa in 0.0f64..0.95, bid in drive()) {
        let phase = classify_phase(alpha, kappa, &bid).unwrap();
        let expect = if alpha <= alpha_c1(&bid) {
            Phase::Anomalous
        } else if alpha <= alpha_c2(&bid, kappa).unwrap() {
            Phase::Frozen
        } else {
            Phase::Oscillating
        };
        prop_assert_eq!(phase, expect);
    }

    #[test]
    fn frozen_growth_rate_is_positive_inside(kappa in 0.0f64..0.95, bid in drive(), u in 0.01f64..0.99) {
        let lo = alpha_c1(&bid);
        let hi = alpha_c2(&bid, kappa).unwrap();
        let theory = frozen_solution(lo + u * (hi - lo), kappa, &bid).unwrap();
        prop_assert!(theory.growth_rate.unwrap() > 0.0);
        prop_assert!(theory.chi > 0.0);
    }
}

#[test]
fn continuity_at_the_transition() {
    for kappa in [0.0f64, 0.1, 0.5, 0.9] {
        for bid in [ExternalBid::none(), ExternalBid::fixed(1.5), ExternalBid::oscillating(2.0)] {
            let ac = alpha_c2(&bid, kappa).unwrap();
            let f = frozen_solution(ac, kappa, &bid).unwrap();
            assert!(f.growth_rate.unwrap().abs() < 1e-9 * ac, "Lambda at boundary");
            let o = ergodic_solution(ac * (1.0 + 1e-9), kappa, &bid).unwrap();
            assert!((o.c0.unwrap() - 1.0).abs() < 1e-6);
            assert!((o.chi - f.chi).abs() < 1e-6 * f.chi);
        }
    }
}

#[test]
fn small_alpha_series() {
    // c0 = α + α²(1 + 2κ) + O(α³) on the unphysical small-α branch
    for kappa in [0.01, 0.1, 0.25] {
        let bid = ExternalBid::none();
        let remainder = |alpha: f64| {
            persistent_correlation_closed_form(alpha, kappa, &bid).unwrap()
                - alpha
                - alpha * alpha * (1.0 + 2.0 * kappa)
        };
        let (a, b) = (1e-3, 5e-4);
        let ratio = remainder(a) / remainder(b);
        assert!((ratio - 8.0).abs() < 0.1, "remainder scales as alpha^{}", ratio.log2());
    }
}

#[test]
fn large_alpha_series() {
    for kappa in [0.0f64, 0.2, 0.6] {
        for amp in [0.0f64, 1.0] {
            let bid = ExternalBid::fixed(amp);
            let a = amp * amp;
            let alpha = 1e6;
            let c0 = ergodic_solution(alpha, kappa, &bid).unwrap().c0.unwrap();
            let lead = (1.0 + 2.0 * a) / (alpha * (1.0 - kappa).powi(2));
            assert!((c0 / lead - 1.0).abs() < 1e-4);
        }
    }
}

#[test]
fn bare_transition_closed_form() {
    for kappa in [0.05f64, 0.3, 0.8] {
        let s = (1.0 + 8.0 * kappa).sqrt();
        let alpha_c2 = alpha_c2(&ExternalBid::none(), kappa).unwrap();
        let chi_c = (s - 1.0) / (2.0 * kappa) - 1.0;
        // at the transition the finite-λ branch has c0 = 1
        let chi = static_susceptibility(alpha_c2, kappa).unwrap();
        assert!((chi - chi_c).abs() < 1e-9 * chi_c.max(1.0));
    }
}

#[test]
fn generic_over_f32() {
    let bid = ExternalBid::<f32>::none();
    assert_eq!(alpha_c2(&bid, 0.0f32).unwrap(), 2.0);
    let t = ergodic_solution(4.0f32, 0.0, &bid).unwrap();
    assert!((t.c0.unwrap() - 1.0 / 3.0).abs() < 1e-6);
}
