//! Adjoint gradients of the penalized sample cost
//! `J(u; θ) + (μ/2) Σ_ℓ h_ℓ(u; θ)`.
//!
//! The adjoint system for harmonic `q` is
//!
//! ```text
//! Z_qᴴ y_q = ω_q² C ζ̂_q − 2μ V (ζ̂_q − η̂_q),   V = diag([g_ℓ]₊)
//! ```
//!
//! and reuses the LU factors of the state solve.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::climate::{DirectionSample, SpectralGrid};
use crate::dynamics::{assemble_impedance, power, slamming_report, Admissibility, ArraySystem, StateSolution};
use crate::error::{Error, Result};

/// Adjoint vectors `y_q`, one per harmonic.
#[derive(Debug, Clone)]
pub struct AdjointSolution {
    pub vectors: Vec<DVector<Complex64>>,
    /// Right-hand sides the vectors were solved against.
    pub rhs: Vec<DVector<Complex64>>,
}

impl AdjointSolution {
    /// Largest `‖Z_qᴴ y_q − rhs_q‖ / ‖rhs_q‖`.
    pub fn max_residual(&self, system: &ArraySystem, u: &[f64]) -> f64 {
        (0..self.vectors.len())
            .map(|q| {
                let zh = assemble_impedance(system, u, q).adjoint();
                let r = (&zh * &self.vectors[q] - &self.rhs[q]).norm();
                let b = self.rhs[q].norm();
                if b > 0.0 {
                    r / b
                } else {
                    r
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `∂/∂c` then `∂/∂s` of the penalized sample cost.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGradient {
    pub components: Vec<f64>,
    pub mu: f64,
    pub direction: DirectionSample,
}

/// Solves `Z_qᴴ y_q = ω_q² C ζ̂_q − 2μ V (ζ̂_q − η̂_q)` for every harmonic.
pub fn solve_adjoint(
    system: &ArraySystem,
    u: &[f64],
    sol: &StateSolution,
    mu: f64,
    alpha: f64,
) -> Result<AdjointSolution> {
    let n = system.bodies();
    let v: Vec<f64> = slamming_report(sol, &system.devices, alpha)
        .devices
        .iter()
        .map(|d| d.g.max(0.0))
        .collect();
    let per_q: Vec<_> = (0..system.grid.len())
        .into_par_iter()
        .map(|q| {
            let w2 = system.db.omegas[q].powi(2);
            let (zeta, eta) = (&sol.amplitudes[q], &sol.incident[q]);
            let rhs = DVector::from_fn(n, |l, _| zeta[l] * (w2 * u[l]) - (zeta[l] - eta[l]) * (2.0 * mu * v[l]));
            let lu = &sol.factors[q];
            // P Z = L U, so Zᴴ = Uᴴ Lᴴ P and y = P⁻¹ (Lᴴ)⁻¹ (Uᴴ)⁻¹ rhs
            let z = lu.u().ad_solve_upper_triangular(&rhs).ok_or(Error::Singular { q })?;
            let mut y = lu.l().ad_solve_lower_triangular(&z).ok_or(Error::Singular { q })?;
            lu.p().inv_permute_rows(&mut y);
            if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::Singular { q });
            }
            Ok((y, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let (vectors, rhs) = per_q.into_iter().unzip();
    Ok(AdjointSolution { vectors, rhs })
}

/// Gradient components from the state and adjoint solutions.
pub fn stochastic_gradient(
    grid: &SpectralGrid,
    u: &[f64],
    sol: &StateSolution,
    adj: &AdjointSolution,
    mu: f64,
) -> StochasticGradient {
    let n = u.len() / 2;
    let mut g = vec![0.0; 2 * n];
    for (q, h) in grid.harmonics.iter().enumerate() {
        let w = h.omega;
        let (zeta, y) = (&sol.amplitudes[q], &adj.vectors[q]);
        for l in 0..n {
            let yz = y[l].conj() * zeta[l];
            g[l] -= 0.5 * w * w * zeta[l].norm_sqr() + (Complex64::new(0.0, w) * yz).re;
            g[n + l] += yz.re;
        }
    }
    StochasticGradient {
        components: g,
        mu,
        direction: sol.direction.clone(),
    }
}

/// Penalized sample cost `J + (μ/2) Σ h_ℓ` evaluated by a fresh state solve.
pub fn penalized_sample_cost(
    system: &ArraySystem,
    u: &[f64],
    direction: &DirectionSample,
    mu: f64,
    alpha: f64,
) -> Result<f64> {
    let sol = crate::dynamics::solve_state(system, u, direction)?;
    let j = power(&system.grid, u, &sol).cost;
    let h: f64 = slamming_report(&sol, &system.devices, alpha).h().iter().sum();
    Ok(j + 0.5 * mu * h)
}

/// Central differences of `f` at `u` with steps `step · (1 + |u_i|)`.
///
/// Components whose perturbation would leave the admissible set use a
/// one-sided difference pointing into it.
pub fn fd_gradient_with<F>(f: F, u: &[f64], step: f64, admissibility: &Admissibility) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive (got {step})")));
    }
    let dim = u.len();
    let mut x = u.to_vec();
    let mut out = Vec::with_capacity(dim);
    let f0 = f(u)?;
    for i in 0..dim {
        let h = step * (1.0 + u[i].abs());
        let lb = admissibility.lower_bound(i, dim);
        let d = if u[i] - h >= lb {
            x[i] = u[i] + h;
            let fp = f(&x)?;
            x[i] = u[i] - h;
            let fm = f(&x)?;
            (fp - fm) / (2.0 * h)
        } else {
            // second-order forward difference
            x[i] = u[i] + h;
            let f1 = f(&x)?;
            x[i] = u[i] + 2.0 * h;
            let f2 = f(&x)?;
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
        };
        x[i] = u[i];
        out.push(d);
    }
    Ok(out)
}

/// Finite-difference gradient of the penalized sample cost.
pub fn fd_gradient(
    system: &ArraySystem,
    u: &[f64],
    direction: &DirectionSample,
    mu: f64,
    alpha: f64,
    step: f64,
    admissibility: &Admissibility,
) -> Result<Vec<f64>> {
    fd_gradient_with(|x| penalized_sample_cost(system, x, direction, mu, alpha), u, step, admissibility)
}
