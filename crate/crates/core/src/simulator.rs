//! Agent-level batch dynamics of the spherical game and the stationary
//! observables measured from a single run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{
    generate_disorder, precompute_couplings_with_budget, Couplings, DisorderSample, GameParams,
    UpdateMode, INIT_STREAM,
};
use crate::real::Real;
use crate::stats::{linear_fit_indexed, mean_err, MeanErr};

/// Number of trailing `φ` snapshots kept for the persistent-correlation estimate.
pub const PHI_HISTORY_LEN: usize = 64;
/// Shortest measurement window accepted by [`run_experiment`].
pub const MIN_MEASURE_STEPS: usize = 16;

/// Rows above this size are processed in parallel. Every row is still reduced
/// sequentially, so results do not depend on the thread count.
const PAR_THRESHOLD: usize = 256;

/// Valuations and constraint force at batch time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<T> {
    pub q: Vec<T>,
    pub lambda: T,
    pub phi: Vec<T>,
    pub t: usize,
}

impl<T: Real> AgentState<T> {
    /// Normalises arbitrary valuations onto the sphere `N^{-1} Σ φ_i² = 1`.
    pub fn from_valuations(q: Vec<T>, t: usize) -> Result<Self> {
        let lambda = rms(&q);
        if lambda == T::zero() || !lambda.is_finite() {
            return Err(Error::DegenerateState { t });
        }
        let inv = T::one() / lambda;
        let phi = q.iter().map(|&x| x * inv).collect();
        Ok(Self { q, lambda, phi, t })
    }

    pub fn n_agents(&self) -> usize {
        self.q.len()
    }

    /// `N^{-1} Σ φ_i²`.
    pub fn sphere_norm(&self) -> T {
        self.phi.iter().map(|&p| p * p).sum::<T>() / T::from_count(self.phi.len())
    }
}

fn rms<T: Real>(q: &[T]) -> T {
    (q.iter().map(|&x| x * x).sum::<T>() / T::from_count(q.len())).sqrt()
}

/// `q_i(0) = s_i δ` with independent signs, `P(s_i = +1) = (1 + sign_bias)/2`.
pub fn init_state<T: Real>(params: &GameParams<T>) -> Result<AgentState<T>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(INIT_STREAM);
    let p_plus = ((T::one() + params.sign_bias) / T::lit(2.0)).to_f64_lossy();
    let delta = params.init_scale;
    let q = (0..params.n_agents)
        .map(|_| if rng.random_bool(p_plus) { delta } else { -delta })
        .collect();
    AgentState::from_valuations(q, 0)
}

fn check_dims<T: Real>(state: &AgentState<T>, n: usize, ctx: &'static str) -> Result<()> {
    if state.q.len() != n || state.phi.len() != n {
        return Err(Error::DimensionMismatch {
            context: ctx,
            expected: n,
            got: state.q.len(),
        });
    }
    Ok(())
}

/// Total bids `A^μ = a_e + Ω_μ + N^{-1/2} Σ_j φ_j ξ_j^μ` for every pattern.
pub fn market_bids<T: Real>(
    state: &AgentState<T>,
    sample: &DisorderSample<T>,
    a_e: T,
) -> Result<Vec<T>> {
    let n = sample.n_agents();
    check_dims(state, n, "market_bids")?;
    let p = sample.n_patterns();
    let mut bids = vec![T::zero(); p];
    let chunk = 512;
    let fill = |start: usize, out: &mut [T]| {
        let end = start + out.len();
        for (i, &phi) in state.phi.iter().enumerate() {
            let lut = [-phi, T::zero(), phi];
            let row = &sample.xi_row(i)[start..end];
            for (acc, &x) in out.iter_mut().zip(row) {
                *acc += lut[(x + 1) as usize];
            }
        }
    };
    if n * p >= PAR_THRESHOLD * PAR_THRESHOLD {
        bids.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(c, out)| fill(c * chunk, out));
    } else {
        fill(0, &mut bids);
    }
    let scale = T::one() / T::from_count(n).sqrt();
    for (acc, &om) in bids.iter_mut().zip(sample.big_omega()) {
        *acc = a_e + om + *acc * scale;
    }
    Ok(bids)
}

fn renormalise<T: Real>(state: &mut AgentState<T>, q_next: Vec<T>) -> Result<()> {
    let t_next = state.t + 1;
    let lambda = rms(&q_next);
    if lambda == T::zero() {
        return Err(Error::DegenerateState { t: t_next });
    }
    if !lambda.is_finite() {
        return Err(Error::Instability {
            t: t_next,
            detail: "constraint force overflowed".into(),
        });
    }
    let inv = T::one() / lambda;
    for (phi, &q) in state.phi.iter_mut().zip(&q_next) {
        *phi = q * inv;
    }
    state.q = q_next;
    state.lambda = lambda;
    state.t = t_next;
    Ok(())
}

/// One batch step through the precomputed couplings:
/// `q_i ← q_i − b_i A_e(t) − h_i − Σ_j J_ij φ_j + κ d_i φ_i`, then renormalise.
pub fn batch_step<T: Real>(
    state: &mut AgentState<T>,
    couplings: &Couplings<T>,
    params: &GameParams<T>,
) -> Result<()> {
    let n = couplings.n_agents();
    check_dims(state, n, "batch_step")?;
    let a_e = params.external.at(state.t);
    let kappa = params.kappa;
    let phi = &state.phi;
    let row_update = |i: usize| -> T {
        let field: T = couplings
            .j_row(i)
            .iter()
            .zip(phi)
            .map(|(&j, &p)| j * p)
            .sum();
        state.q[i] - couplings.b[i] * a_e - couplings.h[i] - field
            + kappa * couplings.d[i] * phi[i]
    };
    let q_next: Vec<T> = if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(row_update).collect()
    } else {
        (0..n).map(row_update).collect()
    };
    renormalise(state, q_next)
}

/// Same update evaluated pattern by pattern, without storing `J`.
pub fn batch_step_streaming<T: Real>(
    state: &mut AgentState<T>,
    sample: &DisorderSample<T>,
    params: &GameParams<T>,
) -> Result<()> {
    let n = sample.n_agents();
    let bids = market_bids(state, sample, params.external.at(state.t))?;
    let nf = T::from_count(n);
    let two_over_sqrt_n = T::lit(2.0) / nf.sqrt();
    let two_over_n = T::lit(2.0) / nf;
    let kappa = params.kappa;
    let row_update = |i: usize| -> T {
        let mut drive = T::zero();
        let mut self_count = 0i64;
        for (&x, &a) in sample.xi_row(i).iter().zip(&bids) {
            match x {
                1 => drive += a,
                -1 => drive -= a,
                _ => continue,
            }
            self_count += 1;
        }
        let d = two_over_n * T::from_i64(self_count).expect("count representable");
        state.q[i] - two_over_sqrt_n * drive + kappa * d * state.phi[i]
    };
    let q_next: Vec<T> = if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(row_update).collect()
    } else {
        (0..n).map(row_update).collect()
    };
    renormalise(state, q_next)
}

/// Fixed-capacity buffer of the most recent `φ` snapshots.
#[derive(Debug, Clone)]
pub struct PhiHistory<T> {
    capacity: usize,
    head: usize,
    snapshots: Vec<Vec<T>>,
}

impl<T: Real> PhiHistory<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            head: 0,
            snapshots: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, phi: &[T]) {
        if self.snapshots.len() < self.capacity {
            self.snapshots.push(phi.to_vec());
        } else {
            self.snapshots[self.head].copy_from_slice(phi);
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Oldest first.
    pub fn chronological(&self) -> Vec<&[T]> {
        let len = self.snapshots.len();
        (0..len)
            .map(|k| self.snapshots[(self.head + k) % len].as_slice())
            .collect()
    }
}

/// Persistent correlation `c₀` from unit-stride `φ` snapshots.
///
/// With `C(τ) = N^{-1} Σ_i φ_i(s) φ_i(s+τ)` averaged over start times `s`, the
/// estimate is the mean of `½[C(τ) + C(τ+1)]` over `τ ∈ [H/2, H-2]`. Each pair
/// removes the `(−1)^τ` component of `C(τ) = c₀ + (1−c₀)(−1)^τ`.
pub fn measure_c0<T: Real, S: AsRef<[T]>>(snapshots: &[S]) -> Result<T> {
    let h = snapshots.len();
    if h < 8 {
        return Err(Error::Insufficient(format!(
            "c0 needs at least 8 snapshots, got {h}"
        )));
    }
    let n = snapshots[0].as_ref().len();
    if let Some(bad) = snapshots.iter().find(|s| s.as_ref().len() != n) {
        return Err(Error::DimensionMismatch {
            context: "measure_c0",
            expected: n,
            got: bad.as_ref().len(),
        });
    }
    let nf = T::from_count(n);
    let corr = |tau: usize| -> T {
        let starts = h - tau;
        let total: T = (0..starts)
            .map(|s| {
                let (a, b) = (snapshots[s].as_ref(), snapshots[s + tau].as_ref());
                a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>() / nf
            })
            .sum();
        total / T::from_count(starts)
    };
    let lags: Vec<T> = (h / 2..=h - 1).map(corr).collect();
    let pairs = lags.len() - 1;
    let total: T = lags.windows(2).map(|w| (w[0] + w[1]) / T::lit(2.0)).sum();
    Ok(total / T::from_count(pairs))
}

/// Observables measured over the measurement window of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunObservables<T> {
    pub c0_hat: T,
    /// Conventional volatility: time-and-pattern variance of `A^μ(t)`.
    pub sigma: T,
    /// `σ² − (staggered bid mean)²`, clamped at zero.
    pub sigma_fl: T,
    pub lambda_mean: T,
    /// Least-squares slope of `λ(t)`, the estimate of `Λ`.
    pub lambda_slope: T,
    pub lambda_slope_stderr: T,
    pub lambda_r_squared: T,
    pub lambda_start: T,
    pub lambda_end: T,
    /// Time average of the pattern-averaged bid.
    pub bid_mean: T,
    /// `τ^{-1} Σ_t (−1)^t Ā(t)`.
    pub bid_staggered: T,
    /// `λ(t)` judged linearly divergent.
    pub frozen_flag: bool,
    pub realized_alpha: T,
}

/// Divergence rule: slope above five standard errors and `λ` at least doubling.
pub fn lambda_diverges<T: Real>(slope: T, stderr: T, start: T, end: T) -> bool {
    slope > T::lit(5.0) * stderr && end > T::lit(2.0) * start
}

/// Disorder, optional couplings and the evolving state of one run.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub params: GameParams<T>,
    pub sample: DisorderSample<T>,
    pub couplings: Option<Couplings<T>>,
    pub state: AgentState<T>,
}

impl<T: Real> Simulation<T> {
    pub fn new(params: GameParams<T>) -> Result<Self> {
        let sample = generate_disorder(&params)?;
        let couplings = match params.update {
            UpdateMode::Couplings => Some(precompute_couplings_with_budget(
                &sample,
                params.memory_budget.saturating_sub(2 * (sample.n_agents() * sample.n_patterns()) as u128),
            )?),
            UpdateMode::Streaming => None,
        };
        let state = init_state(&params)?;
        Ok(Self {
            params,
            sample,
            couplings,
            state,
        })
    }

    pub fn step(&mut self) -> Result<()> {
        match &self.couplings {
            Some(c) => batch_step(&mut self.state, c, &self.params),
            None => batch_step_streaming(&mut self.state, &self.sample, &self.params),
        }
    }

    /// Equilibrates, then measures over `t_measure` steps.
    pub fn run(&mut self) -> Result<RunObservables<T>> {
        let t_measure = self.params.t_measure;
        if t_measure < MIN_MEASURE_STEPS {
            return Err(Error::InvalidParameter {
                name: "t_measure",
                reason: format!("must be at least {MIN_MEASURE_STEPS}, got {t_measure}"),
            });
        }
        for _ in 0..self.params.t_equilibrate {
            self.step()?;
        }

        let p = T::from_count(self.sample.n_patterns());
        let mut sum_a = T::zero();
        let mut sum_a2 = T::zero();
        let mut staggered = T::zero();
        let mut lambdas = Vec::with_capacity(t_measure);
        let mut history = PhiHistory::new(PHI_HISTORY_LEN);
        for k in 0..t_measure {
            let t = self.state.t;
            let bids = market_bids(&self.state, &self.sample, self.params.external.at(t))?;
            let s1: T = bids.iter().copied().sum::<T>() / p;
            let s2: T = bids.iter().map(|&a| a * a).sum::<T>() / p;
            sum_a += s1;
            sum_a2 += s2;
            staggered += if t % 2 == 0 { s1 } else { -s1 };
            lambdas.push(self.state.lambda);
            if k + PHI_HISTORY_LEN >= t_measure {
                history.push(&self.state.phi);
            }
            self.step()?;
        }

        let tau = T::from_count(t_measure);
        let bid_mean = sum_a / tau;
        let bid_staggered = staggered / tau;
        let var = sum_a2 / tau - bid_mean * bid_mean;
        let sigma = var.max(T::zero()).sqrt();
        let sigma_fl = (var - bid_staggered * bid_staggered).max(T::zero()).sqrt();

        let fit = linear_fit_indexed(&lambdas).expect("at least 16 points");
        let lambda_start = lambdas[0];
        let lambda_end = *lambdas.last().expect("non-empty");
        let frozen_flag =
            lambda_diverges(fit.slope, fit.slope_stderr, lambda_start, lambda_end);

        Ok(RunObservables {
            c0_hat: measure_c0(&history.chronological())?,
            sigma,
            sigma_fl,
            lambda_mean: mean_err(&lambdas).mean,
            lambda_slope: fit.slope,
            lambda_slope_stderr: fit.slope_stderr,
            lambda_r_squared: fit.r_squared,
            lambda_start,
            lambda_end,
            bid_mean,
            bid_staggered,
            frozen_flag,
            realized_alpha: self.params.realized_alpha(),
        })
    }
}

/// Builds a fresh disorder sample and initial state from `params` and runs the
/// full equilibration + measurement protocol.
pub fn run_experiment<T: Real>(params: &GameParams<T>) -> Result<RunObservables<T>> {
    if params.t_measure < MIN_MEASURE_STEPS {
        return Err(Error::InvalidParameter {
            name: "t_measure",
            reason: format!("must be at least {MIN_MEASURE_STEPS}, got {}", params.t_measure),
        });
    }
    Simulation::new(params.clone())?.run()
}

/// Seed-averaged observables.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleObservables<T> {
    pub c0: MeanErr<T>,
    pub sigma: MeanErr<T>,
    pub sigma_fl: MeanErr<T>,
    pub lambda_mean: MeanErr<T>,
    pub lambda_slope: MeanErr<T>,
    pub bid_mean: MeanErr<T>,
    pub bid_staggered: MeanErr<T>,
    /// Fraction of runs with `frozen_flag` set.
    pub frozen_fraction: T,
    pub runs: Vec<RunObservables<T>>,
}

/// Runs one independent disorder sample per seed (concurrently) and averages.
/// Runs are reported in seed order.
pub fn run_ensemble<T: Real>(
    params: &GameParams<T>,
    seeds: &[u64],
) -> Result<EnsembleObservables<T>> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter {
            name: "seeds",
            reason: "at least one seed required".into(),
        });
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| run_experiment(&params.clone().with_seed(seed)))
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&RunObservables<T>) -> T| mean_err(&runs.iter().map(f).collect::<Vec<_>>());
    let frozen = runs.iter().filter(|r| r.frozen_flag).count();
    Ok(EnsembleObservables {
        c0: pick(|r| r.c0_hat),
        sigma: pick(|r| r.sigma),
        sigma_fl: pick(|r| r.sigma_fl),
        lambda_mean: pick(|r| r.lambda_mean),
        lambda_slope: pick(|r| r.lambda_slope),
        bid_mean: pick(|r| r.bid_mean),
        bid_staggered: pick(|r| r.bid_staggered),
        frozen_fraction: T::from_count(frozen) / T::from_count(runs.len()),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ExternalBid;

    fn two_agent_sample() -> DisorderSample<f64> {
        DisorderSample::from_strategies(2, 1, &[1, 1], &[1, -1]).unwrap()
    }

    #[test]
    fn forced_positive_init() {
        let mut p = GameParams::<f64>::new(10, 1.0).unwrap();
        p.sign_bias = 1.0;
        let s = init_state(&p).unwrap();
        assert_eq!(s.lambda, 1.0);
        assert!(s.phi.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn unbiased_scale_init() {
        let p = GameParams::<f64>::new(101, 1.0)
            .unwrap()
            .with_init_scale(1e-4)
            .unwrap()
            .with_seed(8);
        let s = init_state(&p).unwrap();
        assert!((s.lambda - 1e-4).abs() < 1e-15);
        assert!((s.sphere_norm() - 1.0).abs() < 1e-12);
        assert!(s.phi.iter().any(|&x| x > 0.0) && s.phi.iter().any(|&x| x < 0.0));
    }

    #[test]
    fn bids_collapse_to_drive_plus_omega() {
        let sample = two_agent_sample();
        let zero = AgentState {
            q: vec![0.0; 2],
            lambda: 1.0,
            phi: vec![0.0; 2],
            t: 0,
        };
        let a = market_bids(&zero, &sample, 0.7).unwrap();
        assert!((a[0] - (0.7 + 1.0 / 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn bids_hand_evaluated() {
        let sample = two_agent_sample();
        let s = AgentState::from_valuations(vec![1.0, 1.0], 0).unwrap();
        let a = market_bids(&s, &sample, 0.0).unwrap();
        assert!((a[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bids_reject_wrong_dimension() {
        let s = AgentState::from_valuations(vec![1.0, 1.0, 1.0], 0).unwrap();
        assert!(matches!(
            market_bids(&s, &two_agent_sample(), 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn full_impact_correction_cancels_self_coupling() {
        // single agent with ξ = +1: J_11 = d_1 = 2
        let sample = DisorderSample::<f64>::from_strategies(1, 1, &[1], &[-1]).unwrap();
        let c = precompute_couplings_with_budget(&sample, u128::MAX).unwrap();
        assert_eq!(c.j(0, 0), 2.0);
        let params = GameParams::new(1, 1.0).unwrap().with_kappa(1.0).unwrap();
        let mut s = AgentState::from_valuations(vec![0.5], 0).unwrap();
        batch_step(&mut s, &c, &params).unwrap();
        // only the constant field h = 0 (Ω = 0 here) remains: q unchanged
        assert_eq!(s.q[0], 0.5);
    }

    #[test]
    fn degenerate_state_is_an_error() {
        assert!(matches!(
            AgentState::<f64>::from_valuations(vec![0.0, 0.0], 4),
            Err(Error::DegenerateState { t: 4 })
        ));
    }

    #[test]
    fn c0_of_constant_history() {
        let snaps: Vec<Vec<f64>> = (0..16).map(|_| vec![1.0, -1.0, 1.0, 1.0]).collect();
        assert!((measure_c0(&snaps).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn c0_of_alternating_history() {
        let base = [1.0, -1.0, 1.0, 1.0];
        let snaps: Vec<Vec<f64>> = (0..16)
            .map(|t| base.iter().map(|&x| if t % 2 == 0 { x } else { -x }).collect())
            .collect();
        assert!(measure_c0(&snaps).unwrap().abs() < 1e-15);
    }

    #[test]
    fn c0_of_two_delta_history() {
        // u, v orthogonal with N^{-1}|u|² = N^{-1}|v|² = 1
        let u = [1.0, 1.0, 1.0, 1.0];
        let v = [1.0, -1.0, 1.0, -1.0];
        let (a, b) = (0.6f64.sqrt(), 0.4f64.sqrt());
        let snaps: Vec<Vec<f64>> = (0..PHI_HISTORY_LEN)
            .map(|t| {
                let s = if t % 2 == 0 { b } else { -b };
                u.iter().zip(&v).map(|(&x, &y)| a * x + s * y).collect()
            })
            .collect();
        assert!((measure_c0(&snaps).unwrap() - 0.6).abs() < 1e-10);
    }

    #[test]
    fn c0_needs_eight_snapshots() {
        let snaps: Vec<Vec<f64>> = (0..7).map(|_| vec![1.0]).collect();
        assert!(matches!(measure_c0(&snaps), Err(Error::Insufficient(_))));
    }

    #[test]
    fn history_ring_keeps_latest() {
        let mut h = PhiHistory::new(3);
        for t in 0..5 {
            h.push(&[t as f64]);
        }
        let c: Vec<f64> = h.chronological().iter().map(|s| s[0]).collect();
        assert_eq!(c, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn short_measurement_rejected() {
        let p = GameParams::<f64>::new(10, 1.0).unwrap().with_windows(0, 15);
        assert!(matches!(
            run_experiment(&p),
            Err(Error::InvalidParameter { name: "t_measure", .. })
        ));
    }

    #[test]
    fn couplings_and_streaming_agree() {
        let params = GameParams::<f64>::new(40, 1.5)
            .unwrap()
            .with_kappa(0.3)
            .unwrap()
            .with_external(ExternalBid::oscillating(0.8))
            .unwrap()
            .with_seed(2);
        let sample = generate_disorder(&params).unwrap();
        let c = precompute_couplings_with_budget(&sample, u128::MAX).unwrap();
        let mut a = init_state(&params).unwrap();
        let mut b = a.clone();
        for _ in 0..20 {
            batch_step(&mut a, &c, &params).unwrap();
            batch_step_streaming(&mut b, &sample, &params).unwrap();
        }
        for (x, y) in a.q.iter().zip(&b.q) {
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
        assert!((a.sphere_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn divergence_rule() {
        assert!(lambda_diverges(0.1, 0.001, 10.0, 30.0));
        assert!(!lambda_diverges(0.1, 0.03, 10.0, 30.0));
        assert!(!lambda_diverges(0.1, 0.001, 10.0, 15.0));
    }
}
