//! Donelan directional spreading and inverse-transform direction sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dominant direction and shape of a `sech²` directional density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingParams {
    /// Dominant direction `θ₀` (rad).
    pub dominant_direction: f64,
    /// Shape `β`; larger values give a sharper peak.
    pub shape: f64,
}

impl SpreadingParams {
    pub fn new(dominant_direction: f64, shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::Domain(format!("spreading shape must be positive, got {shape}")));
        }
        if !dominant_direction.is_finite() {
            return Err(Error::Domain("dominant direction must be finite".into()));
        }
        Ok(Self {
            dominant_direction,
            shape,
        })
    }
}

/// `(β/2) sech²[β(θ−θ₀)]`.
pub fn donelan_pdf(theta: f64, sp: &SpreadingParams) -> f64 {
    let x = sp.shape * (theta - sp.dominant_direction);
    let sech = 1.0 / x.cosh();
    0.5 * sp.shape * sech * sech
}

/// `(1/2)(tanh[β(θ−θ₀)] + 1)`.
pub fn donelan_cdf(theta: f64, sp: &SpreadingParams) -> f64 {
    0.5 * ((sp.shape * (theta - sp.dominant_direction)).tanh() + 1.0)
}

/// `θ₀ + atanh(2ξ − 1)/β`.
pub fn donelan_inverse_cdf(xi: f64, sp: &SpreadingParams) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!("probability must lie in (0, 1), got {xi}")));
    }
    Ok(sp.dominant_direction + (2.0 * xi - 1.0).atanh() / sp.shape)
}

/// One direction per climate component plus the uniform draws that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSample {
    pub thetas: Vec<f64>,
    pub uniforms: Vec<f64>,
}

impl DirectionSample {
    /// Sample with given directions and no associated uniform draw (quadrature nodes).
    pub fn fixed(thetas: Vec<f64>) -> Self {
        let uniforms = vec![f64::NAN; thetas.len()];
        Self { thetas, uniforms }
    }

    /// Each component at its dominant direction.
    pub fn dominant(spreadings: &[SpreadingParams]) -> Self {
        Self::fixed(spreadings.iter().map(|s| s.dominant_direction).collect())
    }

    pub fn from_uniforms(uniforms: &[f64], spreadings: &[SpreadingParams]) -> Result<Self> {
        let thetas = uniforms
            .iter()
            .zip(spreadings)
            .map(|(&xi, sp)| donelan_inverse_cdf(xi, sp))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            thetas,
            uniforms: uniforms.to_vec(),
        })
    }
}

/// Uniform on the open interval (0, 1).
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let xi: f64 = rng.random();
        if xi > 0.0 {
            return xi;
        }
    }
}

/// Draws one independent direction per spreading component.
pub fn sample_direction<R: Rng + ?Sized>(rng: &mut R, spreadings: &[SpreadingParams]) -> DirectionSample {
    let uniforms: Vec<f64> = spreadings.iter().map(|_| open_uniform(rng)).collect();
    // open_uniform never returns 0 or 1, so the inverse is always defined
    DirectionSample::from_uniforms(&uniforms, spreadings).expect("uniform draw inside (0, 1)")
}

/// Interval outside of which each tail carries probability `delta`.
pub fn effective_interval(sp: &SpreadingParams, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Domain(format!("tail probability must lie in (0, 1/2), got {delta}")));
    }
    // symmetric about θ₀ by construction
    let half = (1.0 - 2.0 * delta).atanh() / sp.shape;
    Ok((sp.dominant_direction - half, sp.dominant_direction + half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(theta0: f64, beta: f64) -> SpreadingParams {
        SpreadingParams::new(theta0, beta).unwrap()
    }

    #[test]
    fn cdf_and_inverse_at_median() {
        let s = sp(0.3, 5.0);
        assert_eq!(donelan_cdf(0.3, &s), 0.5);
        assert_eq!(donelan_inverse_cdf(0.5, &s).unwrap(), 0.3);
    }

    #[test]
    fn pdf_at_mode_is_half_beta() {
        let s = sp(0.0, 20.0);
        assert_eq!(donelan_pdf(0.0, &s), 10.0);
    }

    #[test]
    fn inverse_rejects_closed_endpoints() {
        let s = sp(0.0, 1.0);
        assert!(donelan_inverse_cdf(0.0, &s).is_err());
        assert!(donelan_inverse_cdf(1.0, &s).is_err());
    }

    #[test]
    fn pdf_integrates_to_one_over_effective_interval() {
        for beta in [1.0, 5.0, 20.0] {
            let s = sp(0.0, beta);
            let (a, b) = effective_interval(&s, 1e-14).unwrap();
            // composite Simpson on a fine grid
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mut sum = donelan_pdf(a, &s) + donelan_pdf(b, &s);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                sum += w * donelan_pdf(a + i as f64 * h, &s);
            }
            let integral = sum * h / 3.0;
            assert!((integral - 1.0).abs() < 1e-10, "beta {beta}: {integral}");
        }
    }

    #[test]
    fn sampled_directions_follow_cdf() {
        let s = sp(0.2, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut samples: Vec<f64> = (0..100_000)
            .map(|_| sample_direction(&mut rng, &[s]).thetas[0])
            .collect();
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let ks = samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = donelan_cdf(x, &s);
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = [sp(0.0, 5.0), sp(0.5, 20.0)];
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = sample_direction(&mut r1, &s);
            let b = sample_direction(&mut r2, &s);
            assert_eq!(a.thetas.iter().map(|t| t.to_bits()).collect::<Vec<_>>(), b.thetas.iter().map(|t| t.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn effective_interval_properties() {
        let s = sp(1.0, 5.0);
        let delta = 1e-3;
        let (a, b) = effective_interval(&s, delta).unwrap();
        assert_relative_eq!(1.0 - a, b - 1.0, max_relative = 1e-14);
        assert_relative_eq!(donelan_cdf(b, &s) - donelan_cdf(a, &s), 1.0 - 2.0 * delta, max_relative = 1e-12);
        let (a, b) = effective_interval(&s, 0.5 - 1e-12).unwrap();
        assert!((b - a).abs() < 1e-11);
        assert!(effective_interval(&s, 0.5).is_err());
        assert!(effective_interval(&s, 0.0).is_err());
    }
}
