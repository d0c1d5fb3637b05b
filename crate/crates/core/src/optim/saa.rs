//! Sample average approximation: a fixed quadrature rule turns the expected
//! cost into a deterministic one, minimized by projected gradient descent
//! with Armijo steps.

use serde::{Deserialize, Serialize};

use super::linesearch::{projected_armijo, ArmijoParams};
use super::quadrature::{saa_nodes, QuadratureKind, QuadratureRule};
use super::{dot, evaluate_rule, norm, InnerResult, StochasticObjective, TraceEntry};
use crate::dynamics::Admissibility;
use crate::error::{Error, Result};
use crate::rng::{SeedSequence, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaaConfig {
    pub kind: QuadratureKind,
    pub nodes: usize,
    /// Tail probability `δ` cut from each side of the spreading distribution.
    pub tail: f64,
    pub armijo: ArmijoParams,
    pub max_iterations: usize,
}

impl Default for SaaConfig {
    fn default() -> Self {
        Self {
            kind: QuadratureKind::GaussLegendre,
            nodes: 20,
            tail: 1e-3,
            armijo: ArmijoParams::default(),
            max_iterations: 500,
        }
    }
}

/// `‖u − P(u − ∇)‖`.
pub fn stationarity(u: &[f64], grad: &[f64], admissibility: &Admissibility) -> f64 {
    let x = admissibility.project(&u.iter().zip(grad).map(|(a, g)| a - g).collect::<Vec<_>>());
    norm(&u.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>())
}

/// Draws the rule for this inner solve (Monte Carlo nodes from the
/// `(MonteCarloNodes, outer)` stream) and minimizes on it.
pub fn saa_minimize<P: StochasticObjective + ?Sized>(
    problem: &P,
    u0: &[f64],
    mu: f64,
    tau_in: f64,
    cfg: &SaaConfig,
    seeds: &SeedSequence,
    outer: usize,
) -> Result<InnerResult> {
    let mut rng = seeds.rng(Stream::MonteCarloNodes, outer as u64);
    let rule = saa_nodes(cfg.kind, cfg.nodes, problem.spreadings(), cfg.tail, &mut rng)?;
    saa_minimize_with_rule(problem, u0, mu, tau_in, &rule, cfg, outer)
}

/// Projected gradient descent on `Σ_i w_i [J(u; θ_i) + (μ/2) Σ_ℓ h_ℓ(u; θ_i)]`.
///
/// The first trial step is `‖u‖/‖∇‖`; later ones are Barzilai–Borwein steps
/// `sᵀs / sᵀy`. Stops when the stationarity measure drops to `tau_in`, when
/// no Armijo step makes progress, or at the iteration cap.
pub fn saa_minimize_with_rule<P: StochasticObjective + ?Sized>(
    problem: &P,
    u0: &[f64],
    mu: f64,
    tau_in: f64,
    rule: &QuadratureRule,
    cfg: &SaaConfig,
    outer: usize,
) -> Result<InnerResult> {
    let adm = problem.admissibility();
    let mut u = adm.project(u0);
    let mut e = evaluate_rule(problem, &u, rule, mu, true)?;
    let mut g = e.gradient.take().expect("gradient requested");
    let mut trace = Vec::new();
    let mut trial = {
        let (un, gn) = (norm(&u), norm(&g));
        if gn == 0.0 {
            1.0
        } else if un > 0.0 {
            un / gn
        } else {
            1.0 / gn
        }
    };
    let mut converged = false;
    let mut indicator = stationarity(&u, &g, &adm);
    let mut it = 0;
    loop {
        trace.push(TraceEntry {
            outer,
            inner: it,
            cost: e.objective,
            penalty: e.penalty(),
            mu,
            indicator,
            u: u.clone(),
        });
        if indicator <= tau_in {
            converged = true;
            break;
        }
        if it >= cfg.max_iterations {
            break;
        }
        let step = projected_armijo(
            |x| {
                let mut r = evaluate_rule(problem, x, rule, mu, true)?;
                let gx = r.gradient.take().expect("gradient requested");
                Ok((r.objective, (r, gx)))
            },
            &u,
            e.objective,
            &g,
            trial,
            &adm,
            &cfg.armijo,
        )?;
        let Some(acc) = step else {
            log::debug!("SAA line search made no progress at iteration {it}; indicator {indicator:e}");
            break;
        };
        let (r, gx) = acc.payload;
        let s: Vec<f64> = acc.u.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gx.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        trial = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * acc.step };
        u = acc.u;
        e = r;
        g = gx;
        indicator = stationarity(&u, &g, &adm);
        it += 1;
    }
    if !u.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("SAA iterate became non-finite".into()));
    }
    Ok(InnerResult {
        u,
        iterations: it,
        indicator,
        converged,
        initial_step: None,
        step_flagged: false,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::climate::SpreadingParams;
    use crate::optim::quadrature::gl_rule;
    use crate::optim::testing::Quadratic;

    #[test]
    fn converges_to_weighted_minimizer_of_quadratic() {
        let sp = SpreadingParams::new(0.3, 3.0).unwrap();
        let p = Quadratic::new(vec![1.0, 50.0, 0.2], vec![10.0, -4.0, 2.0], vec![3.0, 1.0, -2.0], sp);
        for kind in [QuadratureKind::GaussLegendre, QuadratureKind::MonteCarlo] {
            let cfg = SaaConfig {
                kind,
                nodes: 9,
                max_iterations: 10_000,
                ..SaaConfig::default()
            };
            let mut rng = SeedSequence::new(4).rng(Stream::MonteCarloNodes, 0);
            let rule = saa_nodes(kind, 9, &[sp], cfg.tail, &mut rng).unwrap();
            let r = saa_minimize(&p, &[1.0, 1.0, 1.0], 0.0, 1e-12, &cfg, &SeedSequence::new(4), 0).unwrap();
            let exact = p.weighted_minimizer(&rule);
            for (a, b) in r.u.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-8, "{kind:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_node_reproduces_deterministic_optimum() {
        let sp = SpreadingParams::new(0.25, 3.0).unwrap();
        let p = Quadratic::new(vec![2.0, 1.0], vec![1.0, 2.0], vec![4.0, -4.0], sp);
        let rule = gl_rule(1, &[sp], 1e-3).unwrap();
        let r = saa_minimize_with_rule(&p, &[7.0, 7.0], 0.0, 1e-12, &rule, &SaaConfig::default(), 0).unwrap();
        assert!((r.u[0] - 2.0).abs() < 1e-9);
        assert!((r.u[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stationarity_at_convergence_and_admissible_iterates() {
        let sp = SpreadingParams::new(0.0, 3.0).unwrap();
        let mut p = Quadratic::new(vec![1.0, 3.0], vec![-5.0, 4.0], vec![1.0, 1.0], sp);
        p.admissibility = Admissibility::new(1.0, true).unwrap();
        let tau = 1e-9;
        let r = saa_minimize(&p, &[3.0, 3.0], 0.0, tau, &SaaConfig::default(), &SeedSequence::new(1), 0).unwrap();
        assert!(r.converged);
        assert!(r.indicator <= tau);
        assert!(r.trace.iter().all(|e| p.admissibility.contains(&e.u)));
        // c is pinned at the floor
        assert_eq!(r.u[0], 1.0);
    }

    #[test]
    fn projection_is_idempotent() {
        let adm = Admissibility::new(2.0, true).unwrap();
        let u = [-1.0, 5.0, -3.0, 0.5];
        let once = adm.project(&u);
        assert_eq!(adm.project(&once), once);
    }
}
