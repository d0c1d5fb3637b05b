//! Direction quadrature: Monte Carlo samples or Gauss–Legendre nodes on the
//! effective interval of the spreading distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::climate::{donelan_pdf, effective_interval, sample_direction, DirectionSample, SpreadingParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    MonteCarlo,
    GaussLegendre,
}

/// Direction nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<DirectionSample>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
///
/// Newton iteration on `P_n` from the Chebyshev-like guesses
/// `cos(π(i − ¼)/(n + ½))`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Domain("Gauss-Legendre rule needs at least one node".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("Legendre root {i} of P_{n} did not converge")));
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// Gauss–Legendre rule on the effective interval of each component,
/// tensorized across components; weights include the spreading density.
pub fn gl_rule(n: usize, spreadings: &[SpreadingParams], tail: f64) -> Result<QuadratureRule> {
    let (x, w) = gauss_legendre(n)?;
    let per_component: Vec<Vec<(f64, f64)>> = spreadings
        .iter()
        .map(|sp| {
            let (a, b) = effective_interval(sp, tail)?;
            Ok(x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| {
                    let theta = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                    (theta, 0.5 * (b - a) * donelan_pdf(theta, sp) * wi)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut nodes = vec![DirectionSample::fixed(vec![])];
    let mut weights = vec![1.0];
    for comp in &per_component {
        let mut next_nodes = Vec::with_capacity(nodes.len() * comp.len());
        let mut next_weights = Vec::with_capacity(nodes.len() * comp.len());
        for (node, w) in nodes.iter().zip(&weights) {
            for &(theta, wt) in comp {
                let mut thetas = node.thetas.clone();
                thetas.push(theta);
                next_nodes.push(DirectionSample::fixed(thetas));
                next_weights.push(w * wt);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Monte Carlo rule: `n` sampled directions with weights `1/n`.
pub fn mc_rule<R: Rng + ?Sized>(n: usize, spreadings: &[SpreadingParams], rng: &mut R) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Domain("Monte Carlo rule needs at least one sample".into()));
    }
    Ok(QuadratureRule {
        nodes: (0..n).map(|_| sample_direction(rng, spreadings)).collect(),
        weights: vec![1.0 / n as f64; n],
    })
}

pub fn saa_nodes<R: Rng + ?Sized>(
    kind: QuadratureKind,
    n: usize,
    spreadings: &[SpreadingParams],
    tail: f64,
    rng: &mut R,
) -> Result<QuadratureRule> {
    match kind {
        QuadratureKind::MonteCarlo => mc_rule(n, spreadings, rng),
        QuadratureKind::GaussLegendre => gl_rule(n, spreadings, tail),
    }
}
