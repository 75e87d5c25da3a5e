//! Game configuration, quenched strategy tables and the coupling structures
//! derived from them.
//!
//! Each agent holds two look-up-table strategies `R¹, R² ∈ {-1,1}^p`. Only the
//! combinations `ξ = (R¹ − R²)/2` and `ω = (R¹ + R²)/2` enter the batch
//! dynamics, so a [`DisorderSample`] stores those two tables (as `i8`) plus the
//! pattern-wise `Ω_μ = N^{-1/2} Σ_i ω_i^μ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

/// Random stream used for strategy tables.
pub(crate) const DISORDER_STREAM: u64 = 0;
/// Random stream used for initial valuation signs.
pub(crate) const INIT_STREAM: u64 = 1;

/// Default cap on the memory a single disorder sample plus couplings may use.
pub const DEFAULT_MEMORY_BUDGET: u128 = 8 << 30;

/// Time dependence of the external bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BidMode {
    /// `A_e(t) = Ã` (ζ = 0).
    Static,
    /// `A_e(t) = Ã (-1)^t` (ζ = 1).
    Oscillating,
}

impl BidMode {
    pub fn zeta(self) -> u8 {
        match self {
            BidMode::Static => 0,
            BidMode::Oscillating => 1,
        }
    }

    pub fn from_zeta(zeta: u8) -> Result<Self> {
        match zeta {
            0 => Ok(BidMode::Static),
            1 => Ok(BidMode::Oscillating),
            other => Err(Error::InvalidParameter {
                name: "zeta",
                reason: format!("must be 0 or 1, got {other}"),
            }),
        }
    }
}

/// External contribution to the total market bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalBid<T> {
    pub mode: BidMode,
    pub amplitude: T,
}

impl<T: Real> ExternalBid<T> {
    pub fn new(mode: BidMode, amplitude: T) -> Self {
        Self { mode, amplitude }
    }

    pub fn none() -> Self {
        Self::new(BidMode::Static, T::zero())
    }

    pub fn fixed(amplitude: T) -> Self {
        Self::new(BidMode::Static, amplitude)
    }

    pub fn oscillating(amplitude: T) -> Self {
        Self::new(BidMode::Oscillating, amplitude)
    }

    /// `Ã (-1)^{ζ t}`.
    #[inline]
    pub fn at(&self, t: usize) -> T {
        match self.mode {
            BidMode::Oscillating if t % 2 == 1 => -self.amplitude,
            _ => self.amplitude,
        }
    }

    /// `Ã² δ_{ζ0}`: the part of the drive power that survives a plain time average.
    #[inline]
    pub fn static_power(&self) -> T {
        match self.mode {
            BidMode::Static => self.amplitude * self.amplitude,
            BidMode::Oscillating => T::zero(),
        }
    }

    /// `Ã² δ_{ζ1}`.
    #[inline]
    pub fn oscillating_power(&self) -> T {
        match self.mode {
            BidMode::Static => T::zero(),
            BidMode::Oscillating => self.amplitude * self.amplitude,
        }
    }

    /// First `len` values of the drive.
    pub fn series(&self, len: usize) -> Vec<T> {
        (0..len).map(|t| self.at(t)).collect()
    }
}

/// How a batch step evaluates the interaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// Precomputed `J`, `h`, `b`, `d`: O(N²) per step, O(N²) memory.
    #[default]
    Couplings,
    /// Per-pattern sums straight from the strategy tables: O(pN) per step, no `J`.
    Streaming,
}

/// Full configuration of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct GameParams<T> {
    pub n_agents: usize,
    pub alpha: T,
    pub kappa: T,
    pub external: ExternalBid<T>,
    /// Magnitude `δ` of the initial valuations `q_i(0) = ±δ`.
    pub init_scale: T,
    /// Probability shift of the initial signs: `P(s_i = +1) = (1 + sign_bias)/2`.
    pub sign_bias: T,
    pub t_equilibrate: usize,
    pub t_measure: usize,
    pub seed: u64,
    pub update: UpdateMode,
    pub memory_budget: u128,
}

impl<T: Real> GameParams<T> {
    /// Desk-scale defaults: no drive, `κ = 0`, biased start `δ = 1`,
    /// 1000 equilibration and 2000 measurement steps.
    pub fn new(n_agents: usize, alpha: T) -> Result<Self> {
        let params = Self {
            n_agents,
            alpha,
            kappa: T::zero(),
            external: ExternalBid::none(),
            init_scale: T::one(),
            sign_bias: T::zero(),
            t_equilibrate: 1000,
            t_measure: 2000,
            seed: 0,
            update: UpdateMode::Couplings,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kappa(mut self, kappa: T) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_external(mut self, external: ExternalBid<T>) -> Result<Self> {
        self.external = external;
        self.validate()?;
        Ok(self)
    }

    pub fn with_init_scale(mut self, init_scale: T) -> Result<Self> {
        self.init_scale = init_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_windows(mut self, t_equilibrate: usize, t_measure: usize) -> Self {
        self.t_equilibrate = t_equilibrate;
        self.t_measure = t_measure;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.n_agents == 0 {
            return bad("n_agents", "must be positive".into());
        }
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return bad("alpha", format!("must be finite and > 0, got {}", self.alpha));
        }
        if !(self.kappa >= T::zero() && self.kappa <= T::one()) {
            return bad("kappa", format!("must lie in [0, 1], got {}", self.kappa));
        }
        if !self.external.amplitude.is_finite() {
            return bad("A", "amplitude must be finite".into());
        }
        if !(self.init_scale > T::zero()) || !self.init_scale.is_finite() {
            return bad("init_scale", format!("must be finite and > 0, got {}", self.init_scale));
        }
        if !(self.sign_bias.abs() <= T::one()) {
            return bad("sign_bias", format!("must lie in [-1, 1], got {}", self.sign_bias));
        }
        Ok(())
    }

    /// `p = round(αN)`, at least 1.
    pub fn n_patterns(&self) -> usize {
        let p = (self.alpha * T::from_count(self.n_agents)).round();
        p.to_usize().unwrap_or(usize::MAX).max(1)
    }

    /// `p / N`, the ratio actually simulated.
    pub fn realized_alpha(&self) -> T {
        T::from_count(self.n_patterns()) / T::from_count(self.n_agents)
    }
}

/// Quenched strategy tables of one disorder realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample<T> {
    n: usize,
    p: usize,
    /// `ξ_i^μ`, agent-major (`i * p + μ`).
    xi: Vec<i8>,
    /// `ω_i^μ`, agent-major.
    omega: Vec<i8>,
    /// `Ω_μ`.
    big_omega: Vec<T>,
}

impl<T: Real> DisorderSample<T> {
    /// Builds a sample from explicit strategy tables `r1[i*p + μ]`, `r2[i*p + μ]`.
    pub fn from_strategies(n: usize, p: usize, r1: &[i8], r2: &[i8]) -> Result<Self> {
        for (ctx, table) in [("strategy table R1", r1), ("strategy table R2", r2)] {
            if table.len() != n * p {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n * p,
                    got: table.len(),
                });
            }
            if table.iter().any(|&r| r != 1 && r != -1) {
                return Err(Error::InvalidParameter {
                    name: "strategy",
                    reason: "entries must be +1 or -1".into(),
                });
            }
        }
        let xi: Vec<i8> = r1.iter().zip(r2).map(|(&a, &b)| (a - b) / 2).collect();
        let omega: Vec<i8> = r1.iter().zip(r2).map(|(&a, &b)| (a + b) / 2).collect();
        Ok(Self::from_tables(n, p, xi, omega))
    }

    fn from_tables(n: usize, p: usize, xi: Vec<i8>, omega: Vec<i8>) -> Self {
        let mut column = vec![0i64; p];
        for row in omega.chunks_exact(p) {
            for (acc, &w) in column.iter_mut().zip(row) {
                *acc += i64::from(w);
            }
        }
        let scale = T::one() / T::from_count(n).sqrt();
        let big_omega = column
            .into_iter()
            .map(|s| T::from_i64(s).expect("column sum representable") * scale)
            .collect();
        Self {
            n,
            p,
            xi,
            omega,
            big_omega,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn n_patterns(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn xi(&self, i: usize, mu: usize) -> i8 {
        self.xi[i * self.p + mu]
    }

    #[inline]
    pub fn omega(&self, i: usize, mu: usize) -> i8 {
        self.omega[i * self.p + mu]
    }

    /// Row `ξ_i^·` of agent `i`.
    #[inline]
    pub fn xi_row(&self, i: usize) -> &[i8] {
        &self.xi[i * self.p..(i + 1) * self.p]
    }

    pub fn big_omega(&self) -> &[T] {
        &self.big_omega
    }
}

fn check_budget(what: &'static str, requested: u128, budget: u128) -> Result<()> {
    if requested > budget {
        Err(Error::Resource {
            what,
            requested,
            budget,
        })
    } else {
        Ok(())
    }
}

/// Draws every `R^{ia}_μ` as an independent fair coin from the seed's disorder stream.
pub fn generate_disorder<T: Real>(params: &GameParams<T>) -> Result<DisorderSample<T>> {
    params.validate()?;
    let n = params.n_agents;
    let p = params.n_patterns();
    let entries = (n as u128) * (p as u128);
    check_budget("strategy tables", 2 * entries, params.memory_budget)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(DISORDER_STREAM);
    let entries = entries as usize;
    let mut xi = Vec::with_capacity(entries);
    let mut omega = Vec::with_capacity(entries);
    for _ in 0..entries {
        let r1: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let r2: i8 = if rng.random::<bool>() { 1 } else { -1 };
        xi.push((r1 - r2) / 2);
        omega.push((r1 + r2) / 2);
    }
    Ok(DisorderSample::from_tables(n, p, xi, omega))
}

/// Precomputed interaction structure of the batch update
///
/// `q_i(t+1) = q_i(t) − b_i A_e(t) − h_i − Σ_j J_ij φ_j(t) + κ d_i φ_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings<T> {
    n: usize,
    /// `J_ij = (2/N) Σ_μ ξ_i^μ ξ_j^μ`, row-major.
    j: Vec<T>,
    /// `h_i = (2/√N) Σ_μ ξ_i^μ Ω_μ`.
    pub h: Vec<T>,
    /// `b_i = (2/√N) Σ_μ ξ_i^μ`.
    pub b: Vec<T>,
    /// `d_i = (2/N) Σ_μ (ξ_i^μ)²`.
    pub d: Vec<T>,
}

impl<T: Real> Couplings<T> {
    pub fn n_agents(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn j(&self, i: usize, k: usize) -> T {
        self.j[i * self.n + k]
    }

    #[inline]
    pub fn j_row(&self, i: usize) -> &[T] {
        &self.j[i * self.n..(i + 1) * self.n]
    }
}

#[inline]
fn dot_i8(a: &[i8], b: &[i8]) -> i32 {
    a.iter().zip(b).map(|(&x, &y)| i32::from(x * y)).sum()
}

/// Builds `J`, `h`, `b`, `d` from a sample.
///
/// `J` is the exact integer self-product `ξ ξᵀ` scaled by `2/N`, so it is
/// exactly symmetric and `J_ii == d_i` bit for bit.
pub fn precompute_couplings<T: Real>(sample: &DisorderSample<T>) -> Result<Couplings<T>> {
    precompute_couplings_with_budget(sample, DEFAULT_MEMORY_BUDGET)
}

pub fn precompute_couplings_with_budget<T: Real>(
    sample: &DisorderSample<T>,
    budget: u128,
) -> Result<Couplings<T>> {
    let n = sample.n;
    let elem = std::mem::size_of::<T>() as u128;
    check_budget("coupling matrix", (n as u128) * (n as u128) * elem, budget)?;

    let two_over_n = T::lit(2.0) / T::from_count(n);
    let two_over_sqrt_n = T::lit(2.0) / T::from_count(n).sqrt();

    // Upper triangle in exact integer arithmetic, then mirrored.
    let upper: Vec<Vec<i32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row_i = sample.xi_row(i);
            (i..n).map(|k| dot_i8(row_i, sample.xi_row(k))).collect()
        })
        .collect();
    let mut j = vec![T::zero(); n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let k = i + off;
            let val = T::from_i32(v).expect("i32 representable") * two_over_n;
            j[i * n + k] = val;
            j[k * n + i] = val;
        }
    }

    let mut h = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let row = sample.xi_row(i);
        let mut hs = T::zero();
        let mut bs = 0i64;
        let mut ds = 0i64;
        for (&x, &om) in row.iter().zip(&sample.big_omega) {
            bs += i64::from(x);
            ds += i64::from(x * x);
            if x != 0 {
                hs += if x > 0 { om } else { -om };
            }
        }
        h.push(two_over_sqrt_n * hs);
        b.push(two_over_sqrt_n * T::from_i64(bs).expect("sum representable"));
        d.push(two_over_n * T::from_i64(ds).expect("sum representable"));
    }
    Ok(Couplings { n, j, h, b, d })
}
