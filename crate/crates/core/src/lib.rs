//! Batch spherical Minority Game: finite-size simulator, replica-free
//! stationary theory and exact kernel dynamics of the effective agent.
//!
//! Everything is generic over the scalar type through [`Real`]; the
//! aliases below fix it to `f64`.

// NaN-rejecting checks read as `!(x > 0)`; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod game;
pub mod kernels;
pub mod real;
pub mod simulator;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use game::{
    generate_disorder, precompute_couplings, precompute_couplings_with_budget, BidMode, Couplings,
    DisorderSample, ExternalBid, GameParams, UpdateMode,
};
pub use kernels::{
    bid_mean_trajectory, extract_stationary, iterate_kernels, KernelParams, KernelState,
    KernelStationary, Square,
};
pub use real::Real;
pub use simulator::{
    batch_step, batch_step_streaming, init_state, market_bids, measure_c0, run_ensemble,
    run_experiment, AgentState, EnsembleObservables, RunObservables, Simulation,
};
pub use theory::{
    alpha_c1, alpha_c2, alpha_c2_via_c0, classify_phase, ergodic_solution, frozen_solution,
    stationary_residuals, stationary_solution, Phase, StationaryTheory,
};

pub type Params = GameParams<f64>;
pub type Bid = ExternalBid<f64>;
pub type Sample = DisorderSample<f64>;
pub type State = AgentState<f64>;
pub type Observables = RunObservables<f64>;
pub type Ensemble = EnsembleObservables<f64>;
pub type Theory = StationaryTheory<f64>;
pub type Kernels = KernelState<f64>;
pub type KernelEstimate = KernelStationary<f64>;
