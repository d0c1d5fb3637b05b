//! Outer stochastic quadratic penalty loop.
//!
//! Each outer iteration solves the penalized problem at `μ^j` to tolerance
//! `τ_in^j` (warm-started), then measures `max_ℓ E[h_ℓ]` with a fixed
//! Gauss–Legendre rule shared by every inner method.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::quadrature::gl_rule;
use super::sa::{sa_minimize, SaConfig};
use super::saa::{saa_minimize, SaaConfig};
use super::{evaluate_rule, InnerResult, RuleEvaluation, StochasticObjective, TraceEntry};
use crate::climate::DirectionSample;
use crate::dynamics::ControlVector;
use crate::error::{Error, Result};
use crate::rng::SeedSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    /// `μ₀`; derived from the initial point when absent.
    pub mu0: Option<f64>,
    pub k_mu: f64,
    /// Feasibility tolerance on `max_ℓ E[h_ℓ]` (m⁴).
    pub tau_out: f64,
    pub k_tau: f64,
    pub tau_in0: f64,
    pub max_outer: usize,
    /// Nodes of the feasibility-check rule.
    pub check_nodes: usize,
    /// Tail probability of the feasibility-check rule.
    pub check_tail: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            mu0: None,
            k_mu: 10.0,
            tau_out: 1e-6,
            k_tau: 0.5,
            tau_in0: 1e-2,
            max_outer: 10,
            check_nodes: 64,
            check_tail: 1e-3,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.mu0 {
            if !(mu > 0.0) {
                return Err(Error::scenario("penalty.mu0", "must be positive"));
            }
        }
        if !(self.k_mu > 1.0) {
            return Err(Error::scenario("penalty.k_mu", "must exceed 1"));
        }
        if !(self.tau_out > 0.0 && self.tau_out < 1.0) {
            return Err(Error::scenario("penalty.tau_out", "must lie in (0, 1)"));
        }
        if !(self.k_tau > 0.0 && self.k_tau < 1.0) {
            return Err(Error::scenario("penalty.k_tau", "must lie in (0, 1)"));
        }
        if !(self.tau_in0 >= 0.0) {
            return Err(Error::scenario("penalty.tau_in0", "must be non-negative"));
        }
        if self.max_outer == 0 {
            return Err(Error::scenario("penalty.max_outer", "must be at least 1"));
        }
        if self.check_nodes == 0 {
            return Err(Error::scenario("penalty.check_nodes", "must be at least 1"));
        }
        if !(self.check_tail > 0.0 && self.check_tail < 0.5) {
            return Err(Error::scenario("penalty.check_tail", "must lie in (0, 1/2)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum InnerMethod {
    Sa(SaConfig),
    Saa(SaaConfig),
}

impl InnerMethod {
    pub fn solve<P: StochasticObjective + ?Sized>(
        &self,
        problem: &P,
        u: &[f64],
        mu: f64,
        tau_in: f64,
        seeds: &SeedSequence,
        outer: usize,
    ) -> Result<InnerResult> {
        match self {
            InnerMethod::Sa(cfg) => sa_minimize(problem, u, mu, tau_in, cfg, seeds, outer),
            InnerMethod::Saa(cfg) => saa_minimize(problem, u, mu, tau_in, cfg, seeds, outer),
        }
    }
}

/// Summary of one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub mu: f64,
    pub tau_in: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub indicator: f64,
    /// `max_ℓ E[h_ℓ]` under the check rule after the inner solve.
    pub max_expected_h: f64,
    pub expected_power: f64,
}

/// Outcome of a penalty run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub u: Vec<f64>,
    pub controls: ControlVector,
    /// Mean power `−E[J]` under the check rule (W).
    pub expected_power: f64,
    pub device_powers: Vec<f64>,
    /// `E[h_ℓ]` under the check rule.
    pub expected_h: Vec<f64>,
    pub feasible: bool,
    pub initial_u: Vec<f64>,
    pub initial_power: f64,
    pub initial_max_h: f64,
    pub mu0: f64,
    pub final_mu: f64,
    pub outer: Vec<OuterRecord>,
    pub history: Vec<TraceEntry>,
    pub seed: u64,
    /// Set by drivers that know the isolated-device optimum.
    pub isolated_power: Option<f64>,
    pub interaction_factor: Option<f64>,
    /// Wall time in seconds; not part of any deterministic artifact.
    pub wall_time: f64,
}

impl RunReport {
    pub fn max_expected_h(&self) -> f64 {
        self.expected_h.iter().cloned().fold(0.0, f64::max)
    }
}

/// `μ₀ = 10⁻² |J(u₀; θ₀)| / max(Σ_ℓ h_ℓ(u₀; θ₀), floor)` at the dominant direction.
pub fn default_mu0<P: StochasticObjective + ?Sized>(problem: &P, u0: &[f64]) -> Result<f64> {
    let d = DirectionSample::dominant(problem.spreadings());
    let e = problem.evaluate(u0, &d, 0.0, false)?;
    let mu = 1e-2 * e.cost.abs() / e.penalty().max(problem.violation_floor());
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Numerical(format!("cannot derive an initial penalty parameter (got {mu})")));
    }
    Ok(mu)
}

/// Expected cost, power and constraints under the feasibility-check rule.
pub fn check_evaluation<P: StochasticObjective + ?Sized>(
    problem: &P,
    u: &[f64],
    cfg: &PenaltyConfig,
) -> Result<RuleEvaluation> {
    let rule = gl_rule(cfg.check_nodes, problem.spreadings(), cfg.check_tail)?;
    evaluate_rule(problem, u, &rule, 0.0, false)
}

/// Algorithm: repeat inner solve, test `max E[h] ≤ τ_out`, grow `μ`, shrink `τ_in`.
///
/// At least one inner solve is always performed. Reaching `max_outer` while
/// infeasible is reported through `feasible = false`.
pub fn penalty_loop<P: StochasticObjective + ?Sized>(
    problem: &P,
    u0: &[f64],
    cfg: &PenaltyConfig,
    inner: &InnerMethod,
    seed: u64,
) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate()?;
    if u0.len() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            got: u0.len(),
        });
    }
    let seeds = SeedSequence::new(seed);
    let adm = problem.admissibility();
    let initial_u = adm.project(u0);
    let initial = check_evaluation(problem, &initial_u, cfg)?;
    let mu0 = match cfg.mu0 {
        Some(mu) => mu,
        None => default_mu0(problem, &initial_u)?,
    };

    let mut u = initial_u.clone();
    let mut mu = mu0;
    let mut tau_in = cfg.tau_in0;
    let mut history = Vec::new();
    let mut outer = Vec::new();
    let mut check;
    let mut j = 0;
    loop {
        let r = inner.solve(problem, &u, mu, tau_in, &seeds, j)?;
        u = r.u;
        history.extend(r.trace);
        check = check_evaluation(problem, &u, cfg)?;
        let max_h = check.max_constraint();
        log::info!(
            "outer {j}: mu = {mu:e}, inner iterations = {}, max E[h] = {max_h:e}, power = {}",
            r.iterations,
            -check.cost
        );
        outer.push(OuterRecord {
            outer: j,
            mu,
            tau_in,
            inner_iterations: r.iterations,
            inner_converged: r.converged,
            indicator: r.indicator,
            max_expected_h: max_h,
            expected_power: -check.cost,
        });
        j += 1;
        if max_h <= cfg.tau_out || j >= cfg.max_outer {
            break;
        }
        mu *= cfg.k_mu;
        tau_in *= cfg.k_tau;
    }

    let feasible = check.max_constraint() <= cfg.tau_out;
    Ok(RunReport {
        controls: ControlVector::from_flat(&u)?,
        u,
        expected_power: -check.cost,
        device_powers: check.device_powers.clone(),
        expected_h: check.constraints.clone(),
        feasible,
        initial_u,
        initial_power: -initial.cost,
        initial_max_h: initial.max_constraint(),
        mu0,
        final_mu: mu,
        outer,
        history,
        seed,
        isolated_power: None,
        interaction_factor: None,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
