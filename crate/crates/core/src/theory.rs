//! Exact stationary solutions of the spherical game under a static or
//! period-two external bid.
//!
//! Three regimes exist as a function of `α` at fixed `(κ, Ã, ζ)`:
//!
//! * anomalous (A), `α ≤ α_c1`: non-ergodic, `χ = ∞`;
//! * frozen (F), `α_c1 < α ≤ α_c2`: `λ(t)` grows linearly at rate `Λ`, `c₀ = 1`;
//! * oscillating (O), `α > α_c2`: finite `λ`, `c₀ < 1`.
//!
//! Boundary values belong to the lower-`α` phase. Only `Ã²` enters any formula,
//! and for an oscillating drive the boundaries do not depend on `Ã` at all.

use std::fmt;

use crate::error::{Error, Result};
use crate::game::{BidMode, ExternalBid};
use crate::real::Real;

/// Below this `κ` the closed forms are replaced by their `κ → 0` limits.
pub const KAPPA_EPS: f64 = 1e-8;
/// Discriminants within this distance of zero are clamped to zero.
pub const DISCRIMINANT_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Oscillating,
    Frozen,
    Anomalous,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Oscillating => "O",
            Phase::Frozen => "F",
            Phase::Anomalous => "A",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Closed-form stationary observables. `None` marks a quantity the theory
/// does not predict in the given phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryTheory<T> {
    pub phase: Phase,
    /// Static susceptibility `χ = Ĝ(0)`; `+∞` in the anomalous phase.
    pub chi: T,
    /// Staggered susceptibility `χ̂ = Ĝ(π)` on the in-phase branch.
    pub chi_hat: Option<T>,
    /// Out-of-phase branch `χ̂₋`, diagnostics only.
    pub chi_hat_minus: Option<T>,
    pub c0: Option<T>,
    /// Stationary constraint force; `+∞` in the frozen phase.
    pub lambda: Option<T>,
    /// Growth rate `Λ = lim λ(t)/t`; zero in the oscillating phase.
    pub growth_rate: Option<T>,
    /// `γ` with `λ = ½α(γ − κ)`, oscillating phase only.
    pub gamma: Option<T>,
    pub psi0: Option<T>,
    pub psi1: Option<T>,
    pub sigma_fl: Option<T>,
    pub sigma: Option<T>,
    /// Plain time average of the bid.
    pub bid_mean: Option<T>,
    /// Staggered time average `τ^{-1} Σ_t (−1)^t ⟨A(t)⟩`.
    pub bid_staggered: Option<T>,
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if kappa >= T::zero() && kappa <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must lie in [0, 1], got {kappa}"),
        })
    }
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be finite and > 0, got {alpha}"),
        })
    }
}

fn clamped_sqrt<T: Real>(disc: T, what: &str) -> Result<T> {
    if disc >= T::zero() {
        Ok(disc.sqrt())
    } else if disc > -T::lit(DISCRIMINANT_CLAMP) {
        Ok(T::zero())
    } else {
        Err(Error::Domain(format!("{what}: negative discriminant {disc}")))
    }
}

/// Ergodicity-breaking line `α_c1 = ½ (1 + Ã² δ_{ζ0})^{-1}`.
pub fn alpha_c1<T: Real>(bid: &ExternalBid<T>) -> T {
    T::lit(0.5) / (T::one() + bid.static_power())
}

/// `R = (3 + 2a)² / (2 + 2a)` with `a = Ã² δ_{ζ0}`.
fn boundary_r<T: Real>(a: T) -> T {
    let two = T::lit(2.0);
    let s = T::lit(3.0) + two * a;
    s * s / (two + two * a)
}

/// Frozen-to-oscillating line: the `+` root of `[1 + α(1−κ)]² = αR`,
/// i.e. where the frozen growth rate `Λ` vanishes. `+∞` at `κ = 1`.
pub fn alpha_c2<T: Real>(bid: &ExternalBid<T>, kappa: T) -> Result<T> {
    check_kappa(kappa)?;
    let one_minus = T::one() - kappa;
    if one_minus == T::zero() {
        return Ok(T::infinity());
    }
    let r = boundary_r(bid.static_power());
    let two = T::lit(2.0);
    let root = clamped_sqrt(r * r - T::lit(4.0) * one_minus * r, "alpha_c2")?;
    Ok((r - two * one_minus + root) / (two * one_minus * one_minus))
}

/// The same line derived from the condition `c₀ = 1` with finite `λ`:
/// `2(Ξ−1−2a) / [(Ξ−1−2a−2κ)(3+2a−Ξ)]`, `Ξ = √((1+2a)² + 8κ(1+a))`.
///
/// `Ξ − 1 − 2a` is formed as `8κ(1+a)/(Ξ+1+2a)`; for `κ < KAPPA_EPS` the
/// `κ → 0` limit `2(1+a)` is returned.
pub fn alpha_c2_via_c0<T: Real>(bid: &ExternalBid<T>, kappa: T) -> Result<T> {
    check_kappa(kappa)?;
    let a = bid.static_power();
    let (one, two) = (T::one(), T::lit(2.0));
    if kappa < T::lit(KAPPA_EPS) {
        return Ok(two * (one + a));
    }
    let base = one + two * a;
    let xi = (base * base + T::lit(8.0) * kappa * (one + a)).sqrt();
    let excess = T::lit(8.0) * kappa * (one + a) / (xi + base);
    let gap = T::lit(3.0) + two * a - xi;
    if gap <= T::zero() {
        return Ok(T::infinity());
    }
    Ok(two * excess / ((excess - two * kappa) * gap))
}

/// Phase at `(α, κ, Ã, ζ)`; boundaries go to the lower-`α` phase.
pub fn classify_phase<T: Real>(alpha: T, kappa: T, bid: &ExternalBid<T>) -> Result<Phase> {
    check_alpha(alpha)?;
    check_kappa(kappa)?;
    if alpha <= alpha_c1(bid) {
        Ok(Phase::Anomalous)
    } else if alpha <= alpha_c2(bid, kappa)? {
        Ok(Phase::Frozen)
    } else {
        Ok(Phase::Oscillating)
    }
}

/// Fully frozen solution with diverging `λ(t)`.
pub fn frozen_solution<T: Real>(
    alpha: T,
    kappa: T,
    bid: &ExternalBid<T>,
) -> Result<StationaryTheory<T>> {
    check_alpha(alpha)?;
    check_kappa(kappa)?;
    let lower = alpha_c1(bid);
    let upper = alpha_c2(bid, kappa)?;
    if !(alpha > lower && alpha <= upper) {
        return Err(Error::OutsidePhase {
            phase: "frozen",
            alpha: alpha.to_f64_lossy(),
            lower: lower.to_f64_lossy(),
            upper: upper.to_f64_lossy(),
        });
    }
    let (one, two) = (T::one(), T::lit(2.0));
    let a = bid.static_power();
    let root = (two * alpha * (one + a)).sqrt();
    let chi = one / (root - one);
    let growth_rate = -one - alpha * (one - kappa)
        + alpha.sqrt() * (T::lit(3.0) + two * a) / (two * (one + a)).sqrt();
    let fl = one - one / root;
    let sigma_fl = fl.abs();
    let amp = bid.amplitude;
    let (bid_mean, bid_staggered, sigma) = match bid.mode {
        BidMode::Static => (amp / (one + chi), T::zero(), sigma_fl),
        // χ̂ = 0: the drive passes straight through to the bid
        BidMode::Oscillating => (T::zero(), amp, (fl * fl + amp * amp).sqrt()),
    };
    Ok(StationaryTheory {
        phase: Phase::Frozen,
        chi,
        chi_hat: Some(T::zero()),
        chi_hat_minus: None,
        c0: Some(one),
        lambda: Some(T::infinity()),
        growth_rate: Some(growth_rate),
        gamma: None,
        psi0: Some(one),
        psi1: Some(T::zero()),
        sigma_fl: Some(sigma_fl),
        sigma: Some(sigma),
        bid_mean: Some(bid_mean),
        bid_staggered: Some(bid_staggered),
    })
}

/// Physical root `χ₋ = (x − √(x² − 4ακ)) / (2ακ)` of `ακχ² + χ[1 + α(κ−1)] + 1 = 0`
/// with `x = α(1−κ) − 1`. For `x ≥ 0` it is evaluated as `2 / (x + √(x² − 4ακ))`;
/// `1/(α−1)` for `κ < KAPPA_EPS`.
pub fn static_susceptibility<T: Real>(alpha: T, kappa: T) -> Result<T> {
    let one = T::one();
    if kappa < T::lit(KAPPA_EPS) {
        return Ok(one / (alpha - one));
    }
    let x = alpha * (one - kappa) - one;
    let root = clamped_sqrt(x * x - T::lit(4.0) * alpha * kappa, "static susceptibility")?;
    if x >= T::zero() {
        Ok(T::lit(2.0) / (x + root))
    } else {
        Ok((x - root) / (T::lit(2.0) * alpha * kappa))
    }
}

/// `[α(1−κ) − 1]² − 4ακ`; negative exactly inside `(1/(1+√κ)², 1/(1−√κ)²)`.
pub fn susceptibility_discriminant<T: Real>(alpha: T, kappa: T) -> T {
    let x = alpha * (T::one() - kappa) - T::one();
    x * x - T::lit(4.0) * alpha * kappa
}

/// Closed form of the finite-`λ` persistent correlation with `χ = χ₋` substituted,
///
/// `c₀ = 2α(1+2a)[x − √Δ] / (4α²κ − [α(1+κ) − 1 − √Δ]²)`, `x = α(1−κ) − 1`,
/// `Δ = x² − 4ακ`, `a = Ã² δ_{ζ0}`.
///
/// Valid for `κ > 0` on either side of the forbidden window.
pub fn persistent_correlation_closed_form<T: Real>(
    alpha: T,
    kappa: T,
    bid: &ExternalBid<T>,
) -> Result<T> {
    let (one, two) = (T::one(), T::lit(2.0));
    let a = bid.static_power();
    let root = clamped_sqrt(susceptibility_discriminant(alpha, kappa), "c0")?;
    let x = alpha * (one - kappa) - one;
    let y = alpha * (one + kappa) - one - root;
    Ok(two * alpha * (one + two * a) * (x - root)
        / (T::lit(4.0) * alpha * alpha * kappa - y * y))
}

/// Ergodic solution with finite constraint force, on the in-phase branch `χ̂₊`.
pub fn ergodic_solution<T: Real>(
    alpha: T,
    kappa: T,
    bid: &ExternalBid<T>,
) -> Result<StationaryTheory<T>> {
    check_alpha(alpha)?;
    check_kappa(kappa)?;
    let boundary = alpha_c2(bid, kappa)?;
    if !(alpha > boundary) {
        return Err(Error::OutsidePhase {
            phase: "oscillating",
            alpha: alpha.to_f64_lossy(),
            lower: boundary.to_f64_lossy(),
            upper: f64::INFINITY,
        });
    }
    let (one, two) = (T::one(), T::lit(2.0));
    let a = bid.static_power();
    if kappa >= T::lit(KAPPA_EPS) {
        let disc = susceptibility_discriminant(alpha, kappa);
        debug_assert!(disc > -T::lit(DISCRIMINANT_CLAMP), "α above α_c2 lies outside the forbidden window");
        clamped_sqrt(disc, "ergodic susceptibility")?;
    }
    let chi = static_susceptibility(alpha, kappa)?;
    let c0 = if kappa < T::lit(KAPPA_EPS) {
        chi * (one + two * a)
    } else {
        let opc = one + chi;
        chi * (one + two * a) / (one - kappa * opc * opc)
    };
    let osc = bid.oscillating_power();
    let boost = if osc > T::zero() {
        if !(c0 < one) {
            return Err(Error::Domain(format!(
                "oscillating drive needs c0 < 1 in the ergodic phase, got {c0}"
            )));
        }
        two * osc / (one - c0)
    } else {
        T::zero()
    };
    let root = (alpha * (one + boost)).sqrt();
    let chi_hat = -one / (one + root);
    let chi_hat_minus = -one / (one - root);

    let gamma = -(one + chi_hat * (one - alpha)) / (alpha * chi_hat * (one + chi_hat));
    let lambda = alpha * (gamma - kappa) / two;
    let psi0 = (lambda + alpha * kappa) / lambda;
    let psi1 = one / lambda;

    let opc = one + chi;
    let oph = one + chi_hat;
    let fl2 = (one + c0) / (two * opc * opc) + (one - c0) / (two * oph * oph);
    let amp = bid.amplitude;
    let (bid_mean, bid_staggered, sigma2) = match bid.mode {
        BidMode::Static => (amp / opc, T::zero(), fl2),
        BidMode::Oscillating => (T::zero(), amp / oph, fl2 + amp * amp / (oph * oph)),
    };
    Ok(StationaryTheory {
        phase: Phase::Oscillating,
        chi,
        chi_hat: Some(chi_hat),
        chi_hat_minus: Some(chi_hat_minus),
        c0: Some(c0),
        lambda: Some(lambda),
        growth_rate: Some(T::zero()),
        gamma: Some(gamma),
        psi0: Some(psi0),
        psi1: Some(psi1),
        sigma_fl: Some(fl2.sqrt()),
        sigma: Some(sigma2.sqrt()),
        bid_mean: Some(bid_mean),
        bid_staggered: Some(bid_staggered),
    })
}

/// Anomalous-phase record: `c₀ = 1`, `χ = ∞`, nothing else predicted.
pub fn anomalous_record<T: Real>() -> StationaryTheory<T> {
    StationaryTheory {
        phase: Phase::Anomalous,
        chi: T::infinity(),
        chi_hat: None,
        chi_hat_minus: None,
        c0: Some(T::one()),
        lambda: None,
        growth_rate: None,
        gamma: None,
        psi0: None,
        psi1: None,
        sigma_fl: None,
        sigma: None,
        bid_mean: None,
        bid_staggered: None,
    }
}

/// Classifies and dispatches to the matching closed form.
pub fn stationary_solution<T: Real>(
    alpha: T,
    kappa: T,
    bid: &ExternalBid<T>,
) -> Result<StationaryTheory<T>> {
    match classify_phase(alpha, kappa, bid)? {
        Phase::Anomalous => Ok(anomalous_record()),
        Phase::Frozen => frozen_solution(alpha, kappa, bid),
        Phase::Oscillating => ergodic_solution(alpha, kappa, bid),
    }
}

/// Residuals of the four time-translation-invariant stationary equations
/// (left minus right side), evaluated with the record's `c₀, χ, χ̂, ψ₀, ψ₁`:
///
/// 1. `c₀[αψ₁ + (1+χ)²(1−ψ₀)] − αψ₁χ(1 + 2Ã²δ_{ζ0})`
/// 2. `(1−c₀)[αψ₁ − (1+χ̂)²(1+ψ₀)] − 2αψ₁χ̂Ã²δ_{ζ1}`
/// 3. `(1−ψ₀)χ(1+χ) − ψ₁(1 + χ − αχ)`
/// 4. `−(1+ψ₀)χ̂(1+χ̂) − ψ₁(1 + χ̂ − αχ̂)`
pub fn stationary_residuals<T: Real>(
    alpha: T,
    bid: &ExternalBid<T>,
    theory: &StationaryTheory<T>,
) -> Result<[T; 4]> {
    let missing = || Error::Domain("record lacks the fields needed for residuals".into());
    let c0 = theory.c0.ok_or_else(missing)?;
    let chi = theory.chi;
    let chi_hat = theory.chi_hat.ok_or_else(missing)?;
    let psi0 = theory.psi0.ok_or_else(missing)?;
    let psi1 = theory.psi1.ok_or_else(missing)?;
    let (one, two) = (T::one(), T::lit(2.0));
    let opc = one + chi;
    let oph = one + chi_hat;
    Ok([
        c0 * (alpha * psi1 + opc * opc * (one - psi0))
            - alpha * psi1 * chi * (one + two * bid.static_power()),
        (one - c0) * (alpha * psi1 - oph * oph * (one + psi0))
            - two * alpha * psi1 * chi_hat * bid.oscillating_power(),
        (one - psi0) * chi * opc - psi1 * (one + chi - alpha * chi),
        -(one + psi0) * chi_hat * oph - psi1 * (one + chi_hat - alpha * chi_hat),
    ])
}
