//! Robust stochastic approximation with variable stepsize `t^k = t⁰/√(k+1)`
//! and windowed iterate averaging.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::linesearch::{estimate_initial_step, ArmijoParams};
use super::{check_finite, norm, InnerResult, StochasticObjective, TraceEntry};
use crate::climate::{sample_direction, DirectionSample};
use crate::error::{Error, Result};
use crate::rng::{SeedSequence, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    /// Fixed `t⁰`; estimated by a line search on one sample when absent.
    pub initial_step: Option<f64>,
    /// Averaging and stopping window `W`.
    pub window: usize,
    pub max_iterations: usize,
    pub armijo: ArmijoParams,
    /// Step used when the initial line search fails.
    pub step_floor: f64,
    /// Largest displacement of one step relative to `‖u₀‖`.
    pub max_relative_step: f64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            initial_step: None,
            window: 50,
            max_iterations: 2000,
            armijo: ArmijoParams::default(),
            step_floor: 1e-8,
            max_relative_step: 0.5,
        }
    }
}

/// `t^k = t⁰/√(k+1)`.
pub fn sa_step(t0: f64, k: usize) -> f64 {
    t0 / ((k + 1) as f64).sqrt()
}

/// Runs SA from `u0` at penalty parameter `mu`.
///
/// Direction samples come from the `(Approximation, outer)` stream of
/// `seeds`; the initial-step sample from `(StepEstimate, outer)`. The
/// returned control is the `t^k`-weighted average of the last `W` iterates.
/// A step longer than `max_relative_step · ‖u₀‖` is shortened to that length.
pub fn sa_minimize<P: StochasticObjective + ?Sized>(
    problem: &P,
    u0: &[f64],
    mu: f64,
    tau_in: f64,
    cfg: &SaConfig,
    seeds: &SeedSequence,
    outer: usize,
) -> Result<InnerResult> {
    if cfg.window == 0 {
        return Err(Error::Domain("SA window must be at least 1".into()));
    }
    if !(cfg.max_relative_step > 0.0) {
        return Err(Error::Domain("SA step cap must be positive".into()));
    }
    let adm = problem.admissibility();
    let spreadings = problem.spreadings();
    let mut u = adm.project(u0);

    let (t0, flagged) = match cfg.initial_step {
        Some(t) => (t, false),
        None => {
            let mut rng = seeds.rng(Stream::StepEstimate, outer as u64);
            let d = sample_direction(&mut rng, spreadings);
            let est = estimate_initial_step(problem, &u, &d, mu, &cfg.armijo, cfg.step_floor)?;
            (est.step, est.flagged)
        }
    };

    let radius = cfg.max_relative_step * norm(&u).max(f64::MIN_POSITIVE);
    let mut rng = seeds.rng(Stream::Approximation, outer as u64);
    let mut window: VecDeque<(f64, Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(cfg.window + 1);
    let mut trace = Vec::new();
    let mut indicator = f64::INFINITY;
    let mut converged = false;
    let mut k = 0;
    while k < cfg.max_iterations {
        let d: DirectionSample = sample_direction(&mut rng, spreadings);
        let e = problem.evaluate(&u, &d, mu, true)?;
        let g = e.gradient.clone().expect("gradient requested");
        check_finite(e.objective(mu), Some(&g)).map_err(|_| {
            Error::Numerical(format!("non-finite stochastic gradient at SA iteration {k} (theta = {:?})", d.thetas))
        })?;

        let t = sa_step(t0, k);
        window.push_back((t, u.clone(), g.clone()));
        if window.len() > cfg.window {
            window.pop_front();
        }
        let mut mean = vec![0.0; u.len()];
        for (_, _, gk) in &window {
            for (m, v) in mean.iter_mut().zip(gk) {
                *m += v;
            }
        }
        let wn = window.len() as f64;
        indicator = norm(&mean) / wn;

        trace.push(TraceEntry {
            outer,
            inner: k,
            cost: e.objective(mu),
            penalty: e.penalty(),
            mu,
            indicator,
            u: u.clone(),
        });

        let gn = norm(&g);
        let scale = if t * gn > radius { radius / gn } else { t };
        let next: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - scale * b).collect();
        u = adm.project(&next);
        k += 1;
        if window.len() == cfg.window && indicator <= tau_in {
            converged = true;
            break;
        }
    }

    let weights: f64 = window.iter().map(|(t, _, _)| t).sum();
    let mut avg = vec![0.0; u.len()];
    for (t, uk, _) in &window {
        for (a, v) in avg.iter_mut().zip(uk) {
            *a += (t / weights) * v;
        }
    }
    // a convex combination of admissible points is admissible up to rounding
    adm.project_in_place(&mut avg);

    Ok(InnerResult {
        u: avg,
        iterations: k,
        indicator,
        converged,
        initial_step: Some(t0),
        step_flagged: flagged,
        trace,
    })
}
