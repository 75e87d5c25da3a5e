//! Exact two-time order-parameter dynamics of the effective single-agent
//! process
//!
//! ```text
//! q(t+1) = q(t) + θ(t) − α Σ_{t'≤t} [(1+G)^{-1} − κ]_{tt'} q(t')/λ(t') + √α η(t),
//! ⟨η(t)η(t')⟩ = Σ_{tt'} = [(1+G)^{-1} D (1+Gᵀ)^{-1}]_{tt'},
//! D_{tt'} = 1 + C_{tt'} + 2 A_e(t) A_e(t').
//! ```
//!
//! Because the process is linear and the noise Gaussian, its second moments
//! close exactly. The iteration propagates
//!
//! * `K_{ts} = ⟨q(t) q(s)⟩`, giving `λ(t) = √K_tt` and `C_{ts} = K_ts/(λ(t)λ(s))`;
//! * `L_{ts} = ⟨η(t) q(s)⟩` for `s ≤ t` (noise at `t`, valuation at `s`);
//! * `g_{ts} = ∂⟨q(t)⟩/∂θ(s)`, giving `G_{ts} = g_ts/λ(t)`;
//!
//! one time slice per step. Every matrix is causal, so the resolvent
//! `(1+G)^{-1}` grows by one row of forward substitution per step.

use crate::error::{Error, Result};
use crate::game::ExternalBid;
use crate::real::Real;
use crate::stats::linear_fit;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Square<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Square<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.set(i, j, v);
        self.set(j, i, v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    pub alpha: T,
    pub kappa: T,
    pub external: ExternalBid<T>,
    /// `λ(0) = √⟨q(0)²⟩`.
    pub lambda0: T,
    /// Number of steps `T`; matrices are `(T+1) × (T+1)`.
    pub horizon: usize,
}

impl<T: Real> KernelParams<T> {
    pub fn new(alpha: T, kappa: T, external: ExternalBid<T>, horizon: usize) -> Self {
        Self {
            alpha,
            kappa,
            external,
            lambda0: T::one(),
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return bad("alpha", format!("must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.kappa >= T::zero() && self.kappa <= T::one()) {
            return bad("kappa", format!("must lie in [0, 1], got {}", self.kappa));
        }
        if !(self.lambda0 > T::zero()) || !self.lambda0.is_finite() {
            return bad("lambda0", format!("must be finite and > 0, got {}", self.lambda0));
        }
        if self.horizon < 1 {
            return bad("horizon", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Complete kernel trajectory up to the horizon.
#[derive(Debug, Clone)]
pub struct KernelState<T> {
    pub params: KernelParams<T>,
    /// `C_{tt'}`, symmetric, unit diagonal.
    pub c: Square<T>,
    /// `G_{tt'}`, strictly lower-triangular.
    pub g: Square<T>,
    /// `λ(0..=T)`.
    pub lambda: Vec<T>,
    /// `K_{tt'} = ⟨q(t)q(t')⟩`, symmetric.
    pub k: Square<T>,
    /// `L_{ts} = ⟨η(t) q(s)⟩`, filled for `s ≤ t`.
    pub l: Square<T>,
    /// Noise covariance, symmetric.
    pub sigma: Square<T>,
    pub d: Square<T>,
    /// `(1+G)^{-1}`, unit lower-triangular.
    pub resolvent: Square<T>,
    /// Unnormalised response `g_{ts} = λ(t) G_{ts}`.
    pub raw_response: Square<T>,
}

impl<T: Real> KernelState<T> {
    pub fn horizon(&self) -> usize {
        self.params.horizon
    }

    /// Deterministic bid mean `⟨A(t)⟩` for the state's own drive.
    pub fn bid_means(&self) -> Vec<T> {
        let drive = self.params.external.series(self.horizon() + 1);
        bid_mean_trajectory(self, &drive).expect("own drive has the right length")
    }
}

/// Work buffers of the recursion that do not outlive it.
struct Scratch<T> {
    inv_lambda: Vec<T>,
    drive: Vec<T>,
    // M_{s,·}/λ(·) rows, cached since they are reused by every later L row
    memory: Square<T>,
    y: Vec<T>,
}

/// Runs the exact second-moment recursion from `⟨q(0)²⟩ = λ0²`, `⟨q(0)η⟩ = 0`.
pub fn iterate_kernels<T: Real>(params: &KernelParams<T>) -> Result<KernelState<T>> {
    params.validate()?;
    let horizon = params.horizon;
    let n = horizon + 1;
    let alpha = params.alpha;
    let sqrt_alpha = alpha.sqrt();

    let mut st = KernelState {
        params: *params,
        c: Square::zeros(n),
        g: Square::zeros(n),
        lambda: vec![T::zero(); n],
        k: Square::zeros(n),
        l: Square::zeros(n),
        sigma: Square::zeros(n),
        d: Square::zeros(n),
        resolvent: Square::zeros(n),
        raw_response: Square::zeros(n),
    };
    let mut sc = Scratch {
        inv_lambda: vec![T::zero(); n],
        drive: params.external.series(n),
        memory: Square::zeros(n),
        y: vec![T::zero(); n],
    };

    st.lambda[0] = params.lambda0;
    sc.inv_lambda[0] = T::one() / params.lambda0;
    st.k.set(0, 0, params.lambda0 * params.lambda0);
    st.c.set(0, 0, T::one());

    for t in 0..horizon {
        refresh_slice(&mut st, &mut sc, t);
        noise_cross_row(&mut st, &sc, t, sqrt_alpha);

        // q(t+1) = Σ_u w_u q(u) + √α η(t)
        let w: Vec<T> = (0..=t)
            .map(|u| {
                let own = if u == t { T::one() } else { T::zero() };
                own - alpha * sc.memory.get(t, u)
            })
            .collect();

        for s in 0..=t {
            let mut acc = sqrt_alpha * st.l.get(t, s);
            for (u, &wu) in w.iter().enumerate() {
                acc += wu * st.k.get(u, s);
            }
            st.k.set_sym(t + 1, s, acc);
        }
        let mut with_next = T::zero();
        let mut with_noise = T::zero();
        for (u, &wu) in w.iter().enumerate() {
            with_next += wu * st.k.get(t + 1, u);
            with_noise += wu * st.l.get(t, u);
        }
        let diag = with_next + sqrt_alpha * (with_noise + sqrt_alpha * st.sigma.get(t, t));
        if !(diag > T::zero()) || !diag.is_finite() {
            let tail: Vec<f64> = st.lambda[t.saturating_sub(4)..=t]
                .iter()
                .map(|x| x.to_f64_lossy())
                .collect();
            return Err(Error::Instability {
                t: t + 1,
                detail: format!(
                    "<q(t+1)^2> = {diag} (alpha={}, kappa={}), recent lambda {tail:?}",
                    params.alpha, params.kappa
                ),
            });
        }
        st.k.set(t + 1, t + 1, diag);
        let lam = diag.sqrt();
        st.lambda[t + 1] = lam;
        sc.inv_lambda[t + 1] = T::one() / lam;
        for s in 0..=t {
            let v = st.k.get(t + 1, s) * sc.inv_lambda[t + 1] * sc.inv_lambda[s];
            st.c.set_sym(t + 1, s, v);
        }
        st.c.set(t + 1, t + 1, T::one());

        for s in 0..=t {
            let mut acc = if s == t { T::one() } else { T::zero() };
            for (u, &wu) in w.iter().enumerate().skip(s + 1) {
                acc += wu * st.raw_response.get(u, s);
            }
            st.raw_response.set(t + 1, s, acc);
            st.g.set(t + 1, s, acc * sc.inv_lambda[t + 1]);
        }
    }
    refresh_slice(&mut st, &mut sc, horizon);
    noise_cross_row(&mut st, &sc, horizon, sqrt_alpha);
    Ok(st)
}

/// Row `t` of the resolvent, `D`, `Σ` and the memory weights, once `C` and
/// `G` are known through time `t`.
fn refresh_slice<T: Real>(st: &mut KernelState<T>, sc: &mut Scratch<T>, t: usize) {
    // (1+G) X = 1, forward substitution for row t
    for s in 0..t {
        let mut acc = T::zero();
        for u in s..t {
            acc += st.g.get(t, u) * st.resolvent.get(u, s);
        }
        st.resolvent.set(t, s, -acc);
    }
    st.resolvent.set(t, t, T::one());

    let two = T::lit(2.0);
    for s in 0..=t {
        let v = T::one() + st.c.get(t, s) + two * sc.drive[t] * sc.drive[s];
        st.d.set_sym(t, s, v);
    }

    // y_v = Σ_u X_tu D_uv ; Σ_ts = Σ_v y_v X_sv
    for v in 0..=t {
        let mut acc = T::zero();
        for u in 0..=t {
            acc += st.resolvent.get(t, u) * st.d.get(u, v);
        }
        sc.y[v] = acc;
    }
    for s in 0..=t {
        let xs = st.resolvent.row(s);
        let mut acc = T::zero();
        for v in 0..=s {
            acc += sc.y[v] * xs[v];
        }
        st.sigma.set_sym(t, s, acc);
    }

    let kappa = st.params.kappa;
    let row = sc.memory.row_mut(t);
    for u in 0..=t {
        let own = if u == t { kappa } else { T::zero() };
        row[u] = (st.resolvent.get(t, u) - own) * sc.inv_lambda[u];
    }
}

/// `L_{t,s}` for `s ≤ t` via `L_{t,s+1} = L_{t,s} − α Σ_{t'≤s} M_{st'} L_{t,t'}/λ(t') + √α Σ_{ts}`.
fn noise_cross_row<T: Real>(st: &mut KernelState<T>, sc: &Scratch<T>, t: usize, sqrt_alpha: T) {
    let alpha = st.params.alpha;
    st.l.set(t, 0, T::zero());
    for s in 0..t {
        let mem = sc.memory.row(s);
        let lt = st.l.row(t);
        let mut acc = T::zero();
        for u in 0..=s {
            acc += mem[u] * lt[u];
        }
        let next = lt[s] - alpha * acc + sqrt_alpha * st.sigma.get(t, s);
        st.l.set(t, s + 1, next);
    }
}

/// `⟨A(t)⟩ = Σ_{t'} (1+G)^{-1}_{tt'} A_e(t')`.
pub fn bid_mean_trajectory<T: Real>(state: &KernelState<T>, drive: &[T]) -> Result<Vec<T>> {
    let n = state.horizon() + 1;
    if drive.len() != n {
        return Err(Error::DimensionMismatch {
            context: "bid_mean_trajectory",
            expected: n,
            got: drive.len(),
        });
    }
    Ok((0..n)
        .map(|t| {
            let x = state.resolvent.row(t);
            (0..=t).map(|s| x[s] * drive[s]).sum()
        })
        .collect())
}

/// Tail-window estimates extracted from a kernel trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelStationary<T> {
    pub c0: T,
    pub lambda: T,
    /// Least-squares slope of `λ(t)` over the tail.
    pub growth_rate: T,
    pub sigma_fl: T,
    pub bid_mean: T,
    pub bid_staggered: T,
    /// Largest spread of `C_{t,t−τ}` across tail rows for `τ ≤ 4`.
    pub tail_variation: T,
}

/// Averages over the last `⌊tail_fraction · T⌋` times.
///
/// `c₀` averages `½[C_{t,t−τ} + C_{t,t−τ−1}]` over tail rows `t` and lags
/// `τ` below half the tail length; `σ_fl² = ½ N_tail^{-1} Σ_t [(1+G)^{-1}(1+C)(1+Gᵀ)^{-1}]_tt`.
pub fn extract_stationary<T: Real>(
    state: &KernelState<T>,
    tail_fraction: T,
) -> Result<KernelStationary<T>> {
    if !(tail_fraction > T::zero() && tail_fraction <= T::lit(0.5)) {
        return Err(Error::InvalidParameter {
            name: "tail_fraction",
            reason: format!("must lie in (0, 0.5], got {tail_fraction}"),
        });
    }
    let horizon = state.horizon();
    let width = (tail_fraction * T::from_count(horizon))
        .floor()
        .to_usize()
        .unwrap_or(0);
    if width < 8 {
        return Err(Error::Insufficient(format!(
            "tail of {width} points (horizon {horizon}); need at least 8"
        )));
    }
    let start = horizon - width + 1;
    let tail: Vec<usize> = (start..=horizon).collect();
    let count = T::from_count(tail.len());
    let half = T::lit(0.5);

    let lags = width / 2;
    let mut c0 = T::zero();
    for &t in &tail {
        for tau in 0..lags {
            c0 += half * (state.c.get(t, t - tau) + state.c.get(t, t - tau - 1));
        }
    }
    c0 /= count * T::from_count(lags);

    let mut fl2 = T::zero();
    for &t in &tail {
        let x = state.resolvent.row(t);
        let mut acc = T::zero();
        for u in 0..=t {
            let mut inner = T::zero();
            for v in 0..=t {
                inner += (T::one() + state.c.get(u, v)) * x[v];
            }
            acc += x[u] * inner;
        }
        fl2 += half * acc;
    }
    fl2 /= count;

    let lambdas: Vec<T> = tail.iter().map(|&t| state.lambda[t]).collect();
    let times: Vec<T> = tail.iter().map(|&t| T::from_count(t)).collect();
    let growth_rate = linear_fit(&times, &lambdas)
        .map(|f| f.slope)
        .unwrap_or(T::zero());

    let bids = state.bid_means();
    let mut bid_mean = T::zero();
    let mut bid_staggered = T::zero();
    for &t in &tail {
        bid_mean += bids[t];
        bid_staggered += if t % 2 == 0 { bids[t] } else { -bids[t] };
    }

    let mut tail_variation = T::zero();
    for tau in 0..=4.min(start) {
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for &t in &tail {
            let v = state.c.get(t, t - tau);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        tail_variation = tail_variation.max(hi - lo);
    }

    Ok(KernelStationary {
        c0,
        lambda: lambdas.iter().copied().sum::<T>() / count,
        growth_rate,
        sigma_fl: fl2.max(T::zero()).sqrt(),
        bid_mean: bid_mean / count,
        bid_staggered: bid_staggered / count,
        tail_variation,
    })
}
