//! Evaluates grid points with the selected engines.

use rayon::prelude::*;
use spherical_mg::theory::{alpha_c1, alpha_c2, classify_phase};
use spherical_mg::{
    extract_stationary, iterate_kernels, run_ensemble, stationary_solution, BidMode, ExternalBid,
    GameParams, KernelParams,
};

use crate::row::{finite, opt_finite, BoundaryRow, ResultRow};
use crate::sweep::{Engine, EngineSet, Point};

/// Everything besides the grid point that a run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub agents: usize,
    pub seeds: Vec<u64>,
    pub t_equilibrate: usize,
    pub t_measure: usize,
    pub horizon: usize,
    pub tail: f64,
}

pub fn external(point: &Point) -> ExternalBid<f64> {
    let mode = if point.zeta == 1 {
        BidMode::Oscillating
    } else {
        BidMode::Static
    };
    ExternalBid::new(mode, point.amplitude)
}

fn fill_theory(row: &mut ResultRow, point: &Point) -> spherical_mg::Result<()> {
    let t = stationary_solution(point.alpha, point.kappa, &external(point))?;
    row.c0_theory = opt_finite(t.c0);
    row.sigma_theory = opt_finite(t.sigma);
    row.sigma_fl_theory = opt_finite(t.sigma_fl);
    row.lambda_theory = opt_finite(t.lambda);
    row.growth_theory = opt_finite(t.growth_rate);
    row.chi = finite(t.chi);
    row.chi_hat_plus = opt_finite(t.chi_hat);
    row.chi_hat_minus = opt_finite(t.chi_hat_minus);
    row.bid_mean_theory = opt_finite(t.bid_mean);
    row.bid_staggered_theory = opt_finite(t.bid_staggered);
    Ok(())
}

fn fill_simulation(row: &mut ResultRow, point: &Point, s: &RunSettings) -> spherical_mg::Result<()> {
    let params = GameParams::new(s.agents, point.alpha)?
        .with_kappa(point.kappa)?
        .with_external(external(point))?
        .with_windows(s.t_equilibrate, s.t_measure);
    row.realized_alpha = Some(params.realized_alpha());
    row.n_agents = Some(s.agents);
    row.t_equilibrate = Some(s.t_equilibrate);
    row.t_measure = Some(s.t_measure);
    row.seed_count = Some(s.seeds.len());
    let ens = run_ensemble(&params, &s.seeds)?;
    // a single seed has no spread to report
    let err = |e: f64| if s.seeds.len() > 1 { finite(e) } else { None };
    row.c0_sim = finite(ens.c0.mean);
    row.c0_sim_err = err(ens.c0.stderr);
    row.sigma_sim = finite(ens.sigma.mean);
    row.sigma_sim_err = err(ens.sigma.stderr);
    row.sigma_fl_sim = finite(ens.sigma_fl.mean);
    row.lambda_sim = finite(ens.lambda_mean.mean);
    row.growth_sim = finite(ens.lambda_slope.mean);
    row.bid_mean_sim = finite(ens.bid_mean.mean);
    row.bid_staggered_sim = finite(ens.bid_staggered.mean);
    row.frozen_fraction = Some(ens.frozen_fraction);
    Ok(())
}

fn fill_kernels(row: &mut ResultRow, point: &Point, s: &RunSettings) -> spherical_mg::Result<()> {
    let params = KernelParams::new(point.alpha, point.kappa, external(point), s.horizon);
    let state = iterate_kernels(&params)?;
    let est = extract_stationary(&state, s.tail)?;
    row.c0_kernel = finite(est.c0);
    row.sigma_fl_kernel = finite(est.sigma_fl);
    row.lambda_kernel = finite(est.lambda);
    row.growth_kernel = finite(est.growth_rate);
    row.bid_mean_kernel = finite(est.bid_mean);
    row.bid_staggered_kernel = finite(est.bid_staggered);
    Ok(())
}

/// Runs every selected engine at one point. Failures are recorded in the
/// row's `error` cell; the other engines still run.
pub fn evaluate(point: &Point, engines: &EngineSet, settings: &RunSettings) -> ResultRow {
    let mut row = ResultRow {
        alpha: point.alpha,
        kappa: point.kappa,
        a_tilde: point.amplitude,
        zeta: point.zeta,
        ..Default::default()
    };
    let mut errors = Vec::new();
    match classify_phase(point.alpha, point.kappa, &external(point)) {
        Ok(p) => row.phase = Some(p.label().to_owned()),
        Err(e) => errors.push(format!("phase: {e}")),
    }
    for &engine in &engines.0 {
        let result = match engine {
            Engine::Theory => fill_theory(&mut row, point),
            Engine::Simulate => fill_simulation(&mut row, point, settings),
            Engine::Kernels => fill_kernels(&mut row, point, settings),
        };
        if let Err(e) = result {
            errors.push(format!("{engine}: {e}"));
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Evaluates all points concurrently; rows come back in grid order.
pub fn run_grid(points: &[Point], engines: &EngineSet, settings: &RunSettings) -> Vec<ResultRow> {
    points
        .par_iter()
        .map(|p| evaluate(p, engines, settings))
        .collect()
}

pub fn boundaries(point: &Point) -> spherical_mg::Result<BoundaryRow> {
    let bid = external(point);
    Ok(BoundaryRow {
        kappa: point.kappa,
        a_tilde: point.amplitude,
        zeta: point.zeta,
        alpha_c1: alpha_c1(&bid),
        alpha_c2: alpha_c2(&bid, point.kappa)?,
    })
}
