//! The WEC array control problem as a [`StochasticObjective`].

use crate::adjoint::{solve_adjoint, stochastic_gradient};
use crate::climate::{DirectionSample, SpreadingParams};
use crate::dynamics::{power, slamming_report, solve_state, Admissibility, ArraySystem, ConstraintReport, PowerReport};
use crate::error::{Error, Result};
use crate::optim::{SampleEvaluation, StochasticObjective};

/// Array instance plus slamming parameter, admissible set and spreading.
#[derive(Debug, Clone)]
pub struct ArrayProblem {
    pub system: ArraySystem,
    /// Slamming threshold `α` (RMS relative motion ≤ α·draft).
    pub alpha: f64,
    pub admissibility: Admissibility,
    pub spreadings: Vec<SpreadingParams>,
}

impl ArrayProblem {
    pub fn new(
        system: ArraySystem,
        alpha: f64,
        admissibility: Admissibility,
        spreadings: Vec<SpreadingParams>,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("slamming parameter alpha must be positive (got {alpha})")));
        }
        if spreadings.len() != system.grid.components {
            return Err(Error::Dimension {
                expected: system.grid.components,
                got: spreadings.len(),
            });
        }
        Ok(Self {
            system,
            alpha,
            admissibility,
            spreadings,
        })
    }

    /// Power and slamming statistics for one direction.
    pub fn analyze(&self, u: &[f64], direction: &DirectionSample) -> Result<(PowerReport, ConstraintReport)> {
        let sol = solve_state(&self.system, u, direction)?;
        Ok((
            power(&self.system.grid, u, &sol),
            slamming_report(&sol, &self.system.devices, self.alpha),
        ))
    }
}

impl StochasticObjective for ArrayProblem {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn admissibility(&self) -> Admissibility {
        self.admissibility
    }

    fn spreadings(&self) -> &[SpreadingParams] {
        &self.spreadings
    }

    fn evaluate(&self, u: &[f64], direction: &DirectionSample, mu: f64, gradient: bool) -> Result<SampleEvaluation> {
        let sol = solve_state(&self.system, u, direction)?;
        let p = power(&self.system.grid, u, &sol);
        let report = slamming_report(&sol, &self.system.devices, self.alpha);
        let gradient = if gradient {
            let adj = solve_adjoint(&self.system, u, &sol, mu, self.alpha)?;
            Some(stochastic_gradient(&self.system.grid, u, &sol, &adj, mu).components)
        } else {
            None
        };
        Ok(SampleEvaluation {
            cost: p.cost,
            constraints: report.h(),
            device_powers: p.device_powers,
            gradient,
        })
    }

    /// `10⁻⁶ Σ_ℓ (2α²d_ℓ²)²`: a millionth of the squared threshold.
    fn violation_floor(&self) -> f64 {
        1e-6 * self
            .system
            .devices
            .iter()
            .map(|d| (2.0 * self.alpha * self.alpha * d.draft * d.draft).powi(2))
            .sum::<f64>()
    }
}
