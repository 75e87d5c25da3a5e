mod common;

use proptest::prelude::*;
use spherical_mg::{
    batch_step, batch_step_streaming, precompute_couplings, AgentState, DisorderSample,
    ExternalBid, GameParams, Simulation,
};

fn strategies(n: usize, p: usize) -> impl Strategy<Value = (Vec<i8>, Vec<i8>)> {
    let sign = prop_oneof![Just(1i8), Just(-1i8)];
    (
        prop::collection::vec(sign.clone(), n * p),
        prop::collection::vec(sign, n * p),
    )
}

fn instance() -> impl Strategy<Value = (usize, usize, Vec<i8>, Vec<i8>)> {
    (1usize..=8, 1usize..=4).prop_flat_map(|(n, p)| {
        strategies(n, p).prop_map(move |(r1, r2)| (n, p, r1, r2))
    })
}

proptest! {
    #[test]
    fn xi_and_omega_are_exclusive((n, p, r1, r2) in instance()) {
        let s = DisorderSample::<f64>::from_strategies(n, p, &r1, &r2).unwrap();
        for i in 0..n {
            for mu in 0..p {
                let (x, w) = (s.xi(i, mu), s.omega(i, mu));
                prop_assert_eq!(x * w, 0);
                prop_assert_eq!(x * x + w * w, 1);
            }
        }
    }

    #[test]
    fn couplings_match_definitions((n, p, r1, r2) in instance()) {
        let s = DisorderSample::<f64>::from_strategies(n, p, &r1, &r2).unwrap();
        let c = precompute_couplings(&s).unwrap();
        let nf = n as f64;
        let xi = |i: usize, mu: usize| f64::from(r1[i * p + mu] - r2[i * p + mu]) / 2.0;
        let omega = |i: usize, mu: usize| f64::from(r1[i * p + mu] + r2[i * p + mu]) / 2.0;
        let big: Vec<f64> = (0..p).map(|mu| (0..n).map(|i| omega(i, mu)).sum::<f64>() / nf.sqrt()).collect();
        for i in 0..n {
            let h: f64 = (0..p).map(|mu| xi(i, mu) * big[mu]).sum::<f64>() * 2.0 / nf.sqrt();
            let b: f64 = (0..p).map(|mu| xi(i, mu)).sum::<f64>() * 2.0 / nf.sqrt();
            let d: f64 = (0..p).map(|mu| xi(i, mu).powi(2)).sum::<f64>() * 2.0 / nf;
            prop_assert!((c.h[i] - h).abs() < 1e-12);
            prop_assert!((c.b[i] - b).abs() < 1e-12);
            prop_assert!((c.d[i] - d).abs() < 1e-12);
            for k in 0..n {
                let j: f64 = (0..p).map(|mu| xi(i, mu) * xi(k, mu)).sum::<f64>() * 2.0 / nf;
                prop_assert!((c.j(i, k) - j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn streaming_matches_couplings(seed in 0u64..1000, alpha in 0.2f64..3.0, kappa in 0.0f64..=1.0, amp in -2.0f64..2.0) {
        let params = GameParams::new(40, alpha).unwrap()
            .with_kappa(kappa).unwrap()
            .with_external(ExternalBid::oscillating(amp)).unwrap()
            .with_seed(seed);
        let mut sim = Simulation::new(params.clone()).unwrap();
        let mut other = sim.state.clone();
        let couplings = sim.couplings.clone().unwrap();
        for _ in 0..5 {
            batch_step(&mut sim.state, &couplings, &params).unwrap();
            batch_step_streaming(&mut other, &sim.sample, &params).unwrap();
        }
        for (a, b) in sim.state.q.iter().zip(&other.q) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn spherical_constraint_holds(seed in 0u64..1000, alpha in 0.1f64..5.0, kappa in 0.0f64..=1.0) {
        let params = GameParams::new(30, alpha).unwrap().with_kappa(kappa).unwrap().with_seed(seed);
        let mut sim = Simulation::new(params).unwrap();
        for _ in 0..20 {
            sim.step().unwrap();
            prop_assert!((sim.state.sphere_norm() - 1.0).abs() < 1e-10);
        }
    }

    /// `(R¹, R²) → (−R², −R¹)` keeps `ξ` and negates `ω`; together with
    /// `q → −q` and `A_e → −A_e` the update is exactly odd.
    #[test]
    fn sign_symmetry((n, p, r1, r2) in instance(), q0 in prop::collection::vec(-2.0f64..2.0, 8),
                     kappa in 0.0f64..=1.0, amp in -2.0f64..2.0, oscillating in any::<bool>()) {
        prop_assume!(q0[..n].iter().any(|&x| x != 0.0));
        let flip = |r: &[i8]| r.iter().map(|&x| -x).collect::<Vec<_>>();
        let external = |a: f64| if oscillating { ExternalBid::oscillating(a) } else { ExternalBid::fixed(a) };
        let build = |r1: &[i8], r2: &[i8], q: Vec<f64>, a: f64| {
            let params = GameParams::new(n, p as f64 / n as f64).unwrap()
                .with_kappa(kappa).unwrap()
                .with_external(external(a)).unwrap();
            let sample = DisorderSample::from_strategies(n, p, r1, r2).unwrap();
            let couplings = Some(precompute_couplings(&sample).unwrap());
            Simulation { params, sample, couplings, state: AgentState::from_valuations(q, 0).unwrap() }
        };
        let q0 = q0[..n].to_vec();
        let mut plain = build(&r1, &r2, q0.clone(), amp);
        let mut mirror = build(&flip(&r2), &flip(&r1), q0.iter().map(|x| -x).collect(), -amp);
        for _ in 0..6 {
            plain.step().unwrap();
            mirror.step().unwrap();
            for (a, b) in plain.state.q.iter().zip(&mirror.state.q) {
                prop_assert_eq!(*a, -*b);
            }
        }
    }
}

#[test]
fn coupling_update_matches_direct_evaluation() {
    let mut rng = common::rng(21);
    for _ in 0..200 {
        let inst = common::random_instance(&mut rng, 8, 4);
        assert!(common::coupling_vs_brute_force(&inst, 10) <= 1e-12);
    }
}

#[test]
fn four_agent_two_pattern_trajectory() {
    let inst = common::Instance {
        n: 4,
        p: 2,
        r1: vec![1, -1, 1, 1, -1, -1, 1, -1],
        r2: vec![-1, -1, 1, -1, 1, 1, -1, -1],
        q0: vec![0.5, -1.0, 2.0, 0.25],
        kappa: 0.5,
        external: ExternalBid::fixed(0.3),
    };
    assert!(common::coupling_vs_brute_force(&inst, 3) <= 1e-12);
}
