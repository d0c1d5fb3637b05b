//! Optimizers for the expected penalized cost
//! `Q_μ(u) = E_θ[J(u; θ) + (μ/2) Σ_ℓ h_ℓ(u; θ)]` over the admissible set.
//!
//! Everything here works against the [`StochasticObjective`] trait, so the
//! same code drives the WEC array problem and the analytic test problems.

pub mod linesearch;
pub mod penalty;
pub mod quadrature;
pub mod sa;
pub mod saa;

pub use linesearch::{estimate_initial_step, projected_armijo, ArmijoParams, StepEstimate};
pub use penalty::{penalty_loop, InnerMethod, OuterRecord, PenaltyConfig, RunReport};
pub use quadrature::{gauss_legendre, gl_rule, mc_rule, saa_nodes, QuadratureKind, QuadratureRule};
pub use sa::{sa_minimize, sa_step, SaConfig};
pub use saa::{saa_minimize, saa_minimize_with_rule, stationarity, SaaConfig};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::climate::{DirectionSample, SpreadingParams};
use crate::dynamics::Admissibility;
use crate::error::{Error, Result};

/// Sample of the penalized cost at one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEvaluation {
    /// `J(u; θ)`.
    pub cost: f64,
    /// `h_ℓ(u; θ)` per constraint.
    pub constraints: Vec<f64>,
    /// Per-device mean power (empty for problems without devices).
    pub device_powers: Vec<f64>,
    /// Gradient of `J + (μ/2) Σ h_ℓ`, when requested.
    pub gradient: Option<Vec<f64>>,
}

impl SampleEvaluation {
    pub fn penalty(&self) -> f64 {
        self.constraints.iter().sum()
    }

    pub fn objective(&self, mu: f64) -> f64 {
        self.cost + 0.5 * mu * self.penalty()
    }
}

/// A cost that depends on a random direction sample.
pub trait StochasticObjective: Sync {
    /// Length of the control vector.
    fn dim(&self) -> usize;

    fn admissibility(&self) -> Admissibility;

    /// One spreading distribution per climate component.
    fn spreadings(&self) -> &[SpreadingParams];

    fn evaluate(&self, u: &[f64], direction: &DirectionSample, mu: f64, gradient: bool) -> Result<SampleEvaluation>;

    /// Smallest constraint total treated as a genuine violation when
    /// choosing the initial penalty parameter.
    fn violation_floor(&self) -> f64 {
        f64::MIN_POSITIVE
    }
}

/// Quadrature-weighted expectation of a [`SampleEvaluation`].
#[derive(Debug, Clone, PartialEq)]
pub struct RuleEvaluation {
    pub objective: f64,
    pub cost: f64,
    /// `E[h_ℓ]`.
    pub constraints: Vec<f64>,
    pub device_powers: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

impl RuleEvaluation {
    pub fn penalty(&self) -> f64 {
        self.constraints.iter().sum()
    }

    pub fn max_constraint(&self) -> f64 {
        self.constraints.iter().cloned().fold(0.0, f64::max)
    }
}

/// Evaluates every node in parallel and reduces in node order.
pub fn evaluate_rule<P: StochasticObjective + ?Sized>(
    problem: &P,
    u: &[f64],
    rule: &QuadratureRule,
    mu: f64,
    gradient: bool,
) -> Result<RuleEvaluation> {
    let samples: Vec<SampleEvaluation> = rule
        .nodes
        .par_iter()
        .map(|d| problem.evaluate(u, d, mu, gradient))
        .collect::<Result<_>>()?;
    let mut out = RuleEvaluation {
        objective: 0.0,
        cost: 0.0,
        constraints: vec![0.0; samples.first().map_or(0, |s| s.constraints.len())],
        device_powers: vec![0.0; samples.first().map_or(0, |s| s.device_powers.len())],
        gradient: gradient.then(|| vec![0.0; u.len()]),
    };
    for (s, &w) in samples.iter().zip(&rule.weights) {
        out.objective += w * s.objective(mu);
        out.cost += w * s.cost;
        for (a, b) in out.constraints.iter_mut().zip(&s.constraints) {
            *a += w * b;
        }
        for (a, b) in out.device_powers.iter_mut().zip(&s.device_powers) {
            *a += w * b;
        }
        if let (Some(acc), Some(g)) = (out.gradient.as_mut(), s.gradient.as_ref()) {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += w * b;
            }
        }
    }
    check_finite(out.objective, out.gradient.as_deref())?;
    Ok(out)
}

pub(crate) fn check_finite(value: f64, gradient: Option<&[f64]>) -> Result<()> {
    if !value.is_finite() || gradient.is_some_and(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("non-finite cost or gradient".into()));
    }
    Ok(())
}

/// One inner iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub outer: usize,
    pub inner: usize,
    /// Sample (SA) or quadrature (SAA) penalized cost at the iterate.
    pub cost: f64,
    /// `Σ_ℓ h_ℓ` of the same sample or quadrature.
    pub penalty: f64,
    pub mu: f64,
    /// Stopping indicator after this iteration.
    pub indicator: f64,
    /// The iterate itself.
    pub u: Vec<f64>,
}

/// Outcome of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub indicator: f64,
    pub converged: bool,
    /// SA only: initial step used.
    pub initial_step: Option<f64>,
    /// SA only: the initial-step line search fell back to the floor.
    pub step_flagged: bool,
    pub trace: Vec<TraceEntry>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
