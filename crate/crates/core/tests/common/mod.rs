#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spherical_mg::{
    precompute_couplings, AgentState, DisorderSample, ExternalBid, GameParams, Simulation,
};

/// Small random instance with its raw strategy tables.
pub struct Instance {
    pub n: usize,
    pub p: usize,
    pub r1: Vec<i8>,
    pub r2: Vec<i8>,
    pub q0: Vec<f64>,
    pub kappa: f64,
    pub external: ExternalBid<f64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_p: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(1..=max_p);
    let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1i8 } else { -1 };
    let r1 = (0..n * p).map(|_| sign(rng)).collect();
    let r2 = (0..n * p).map(|_| sign(rng)).collect();
    let q0 = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let kappa = rng.random_range(0.0..=1.0);
    let amp = rng.random_range(0.0..3.0);
    let external = if rng.random_bool(0.5) {
        ExternalBid::fixed(amp)
    } else {
        ExternalBid::oscillating(amp)
    };
    Instance {
        n,
        p,
        r1,
        r2,
        q0,
        kappa,
        external,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Simulation wired to an explicit instance, using the coupling update.
pub fn simulation_for(inst: &Instance) -> Simulation<f64> {
    let params = GameParams::new(inst.n, inst.p as f64 / inst.n as f64)
        .unwrap()
        .with_kappa(inst.kappa)
        .unwrap()
        .with_external(inst.external)
        .unwrap();
    assert_eq!(params.n_patterns(), inst.p);
    let sample = DisorderSample::from_strategies(inst.n, inst.p, &inst.r1, &inst.r2).unwrap();
    let couplings = Some(precompute_couplings(&sample).unwrap());
    Simulation {
        params,
        sample,
        couplings,
        state: AgentState::from_valuations(inst.q0.clone(), 0).unwrap(),
    }
}

/// Direct evaluation of the valuation update from the raw strategies:
/// `q_i ← q_i − (2/√N) Σ_μ ξ_i^μ (A^μ − κ φ_i ξ_i^μ / √N)`.
pub fn brute_force_trajectory(inst: &Instance, steps: usize) -> Vec<Vec<f64>> {
    let n = inst.n;
    let p = inst.p;
    let nf = n as f64;
    let xi = |i: usize, mu: usize| f64::from(inst.r1[i * p + mu] - inst.r2[i * p + mu]) / 2.0;
    let omega = |i: usize, mu: usize| f64::from(inst.r1[i * p + mu] + inst.r2[i * p + mu]) / 2.0;
    let big_omega: Vec<f64> = (0..p)
        .map(|mu| (0..n).map(|i| omega(i, mu)).sum::<f64>() / nf.sqrt())
        .collect();

    let mut q = inst.q0.clone();
    let mut out = vec![q.clone()];
    for t in 0..steps {
        let lambda = (q.iter().map(|x| x * x).sum::<f64>() / nf).sqrt();
        let phi: Vec<f64> = q.iter().map(|x| x / lambda).collect();
        let a_e = inst.external.at(t);
        let bids: Vec<f64> = (0..p)
            .map(|mu| {
                a_e + big_omega[mu] + (0..n).map(|j| phi[j] * xi(j, mu)).sum::<f64>() / nf.sqrt()
            })
            .collect();
        q = (0..n)
            .map(|i| {
                let push: f64 = (0..p)
                    .map(|mu| xi(i, mu) * (bids[mu] - inst.kappa * phi[i] * xi(i, mu) / nf.sqrt()))
                    .sum();
                q[i] - 2.0 / nf.sqrt() * push
            })
            .collect();
        out.push(q.clone());
    }
    out
}

/// Largest discrepancy, relative to the trajectory scale, between the
/// library's coupling update and the direct evaluation.
pub fn coupling_vs_brute_force(inst: &Instance, steps: usize) -> f64 {
    let reference = brute_force_trajectory(inst, steps);
    let mut sim = simulation_for(inst);
    let mut worst: f64 = 0.0;
    for expect in reference.iter().skip(1) {
        sim.step().unwrap();
        let scale = expect.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (a, b) in sim.state.q.iter().zip(expect) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}
