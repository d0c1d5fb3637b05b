//! Armijo backtracking along the projection arc `t ↦ P(u − t∇)`.

use serde::{Deserialize, Serialize};

use super::{norm, StochasticObjective};
use crate::climate::DirectionSample;
use crate::dynamics::Admissibility;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmijoParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Backtracking factor.
    pub factor: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            factor: 0.5,
            max_backtracks: 40,
        }
    }
}

/// Accepted step of a line search.
#[derive(Debug, Clone, PartialEq)]
pub struct Accepted<T> {
    pub step: f64,
    pub u: Vec<f64>,
    pub value: f64,
    pub payload: T,
}

fn sufficient(f_new: f64, f0: f64, c1: f64, grad: &[f64], u: &[f64], x: &[f64]) -> bool {
    let slope: f64 = grad.iter().zip(x.iter().zip(u)).map(|(g, (a, b))| g * (a - b)).sum();
    f_new <= f0 + c1 * slope
}

/// Backtracks from `trial` until `f(P(u − t∇)) ≤ f(u) + c₁ ∇·(P(u − t∇) − u)`.
///
/// `f` returns the value and an arbitrary payload (for instance the gradient
/// at the trial point). Returns `None` if no step is accepted or the
/// projected point does not move.
pub fn projected_armijo<T, F>(
    f: F,
    u: &[f64],
    f0: f64,
    grad: &[f64],
    trial: f64,
    admissibility: &Admissibility,
    params: &ArmijoParams,
) -> Result<Option<Accepted<T>>>
where
    F: Fn(&[f64]) -> Result<(f64, T)>,
{
    let mut t = trial;
    for _ in 0..=params.max_backtracks {
        let x: Vec<f64> = admissibility.project(&u.iter().zip(grad).map(|(a, g)| a - t * g).collect::<Vec<_>>());
        if x == u {
            return Ok(None);
        }
        let (value, payload) = f(&x)?;
        if value.is_finite() && sufficient(value, f0, params.c1, grad, u, &x) {
            return Ok(Some(Accepted {
                step: t,
                u: x,
                value,
                payload,
            }));
        }
        t *= params.factor;
    }
    Ok(None)
}

/// Initial SA step from a single-sample line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEstimate {
    pub step: f64,
    /// The search failed and `step` is the configured floor.
    pub flagged: bool,
}

/// Armijo step along `−G(u₀, θ)` on the sample cost.
///
/// Starting from `‖u₀‖/‖G‖` the step is doubled while the Armijo condition
/// holds and halved until it does, so the result is the largest accepted
/// step on that dyadic ladder.
pub fn estimate_initial_step<P: StochasticObjective + ?Sized>(
    problem: &P,
    u0: &[f64],
    direction: &DirectionSample,
    mu: f64,
    params: &ArmijoParams,
    floor: f64,
) -> Result<StepEstimate> {
    let adm = problem.admissibility();
    let e = problem.evaluate(u0, direction, mu, true)?;
    let f0 = e.objective(mu);
    let g = e.gradient.expect("gradient requested");
    let gn = norm(&g);
    if gn == 0.0 {
        return Err(Error::Numerical("zero stochastic gradient at the initial point".into()));
    }
    let accepts = |t: f64| -> Result<bool> {
        let x = adm.project(&u0.iter().zip(&g).map(|(a, b)| a - t * b).collect::<Vec<_>>());
        if x == u0 {
            return Ok(false);
        }
        let v = problem.evaluate(&x, direction, mu, false)?.objective(mu);
        Ok(v.is_finite() && sufficient(v, f0, params.c1, &g, u0, &x))
    };

    let un = norm(u0);
    let mut t = if un > 0.0 { un / gn } else { 1.0 / gn };
    if accepts(t)? {
        for _ in 0..params.max_backtracks {
            if !accepts(t / params.factor)? {
                break;
            }
            t /= params.factor;
        }
        return Ok(StepEstimate { step: t, flagged: false });
    }
    for _ in 0..params.max_backtracks {
        t *= params.factor;
        if accepts(t)? {
            return Ok(StepEstimate { step: t, flagged: false });
        }
    }
    log::warn!("initial step line search failed; using floor step {floor}");
    Ok(StepEstimate { step: floor, flagged: true })
}
