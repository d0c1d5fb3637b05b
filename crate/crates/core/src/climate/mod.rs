//! Stochastic sea state: frequency spectrum, directional spreading,
//! equal-power discretization and time-domain realizations.

mod dispersion;
mod spectrum;
mod spreading;

pub use dispersion::dispersion_solve;
pub use spectrum::{pm_cdf, pm_density, pm_inverse_cdf, SpectrumParams};
pub use spreading::{
    donelan_cdf, donelan_inverse_cdf, donelan_pdf, effective_interval, sample_direction, DirectionSample,
    SpreadingParams,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_GRAVITY: f64 = 9.81;
pub const DEFAULT_WATER_DENSITY: f64 = 1025.0;

/// One spectral component with its own directional spreading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateComponent {
    pub spectrum: SpectrumParams,
    pub spreading: SpreadingParams,
}

/// Superposition of independent (spectrum, spreading) components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveClimate {
    pub components: Vec<ClimateComponent>,
    pub water_depth: f64,
    pub gravity: f64,
    pub water_density: f64,
}

impl WaveClimate {
    pub fn new(components: Vec<ClimateComponent>, water_depth: f64) -> Result<Self> {
        let climate = Self {
            components,
            water_depth,
            gravity: DEFAULT_GRAVITY,
            water_density: DEFAULT_WATER_DENSITY,
        };
        climate.validate()?;
        Ok(climate)
    }

    /// Single-component climate.
    pub fn single(spectrum: SpectrumParams, spreading: SpreadingParams, water_depth: f64) -> Result<Self> {
        Self::new(vec![ClimateComponent { spectrum, spreading }], water_depth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Domain("wave climate needs at least one component".into()));
        }
        if !(self.water_depth > 0.0) {
            return Err(Error::Domain(format!("water depth must be positive, got {}", self.water_depth)));
        }
        if !(self.gravity > 0.0) || !(self.water_density > 0.0) {
            return Err(Error::Domain("gravity and water density must be positive".into()));
        }
        Ok(())
    }

    pub fn spreadings(&self) -> Vec<SpreadingParams> {
        self.components.iter().map(|c| c.spreading).collect()
    }

    /// Peak period of the most energetic component.
    pub fn dominant_peak_period(&self) -> f64 {
        self.components
            .iter()
            .max_by(|a, b| a.spectrum.total_variance().total_cmp(&b.spectrum.total_variance()))
            .map(|c| c.spectrum.peak_period())
            .unwrap_or(1.0)
    }
}

/// One discrete harmonic of the sea state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Index of the climate component this harmonic belongs to.
    pub component: usize,
    /// Representative frequency `f_q` (Hz).
    pub frequency: f64,
    /// Bin width `Δf_q` (Hz).
    pub width: f64,
    /// Angular frequency `2π f_q` (rad/s).
    pub omega: f64,
    /// Wave number `k_q` (rad/m).
    pub wave_number: f64,
    /// Amplitude `H_q / 2` (m).
    pub amplitude: f64,
}

impl Harmonic {
    /// Wave height `H_q`.
    pub fn height(&self) -> f64 {
        2.0 * self.amplitude
    }
}

/// Discrete harmonics of all components, concatenated in component order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub harmonics: Vec<Harmonic>,
    pub components: usize,
}

impl SpectralGrid {
    /// Discretizes every component independently into `bins` equal-power bins.
    pub fn build(climate: &WaveClimate, bins: usize, coverage: f64) -> Result<Self> {
        climate.validate()?;
        let mut harmonics = Vec::with_capacity(bins * climate.components.len());
        for (i, c) in climate.components.iter().enumerate() {
            harmonics.extend(discretize_equal_power(
                &c.spectrum,
                bins,
                coverage,
                climate.water_depth,
                climate.gravity,
                i,
            )?);
        }
        Ok(Self {
            harmonics,
            components: climate.components.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.harmonics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.harmonics.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.harmonics.iter().map(|h| h.omega).collect()
    }

    /// Discrete variance `Σ H_q²/8`.
    pub fn variance(&self) -> f64 {
        self.harmonics.iter().map(|h| 0.5 * h.amplitude * h.amplitude).sum()
    }

    /// Highest angular frequency in the grid.
    pub fn max_omega(&self) -> f64 {
        self.harmonics.iter().map(|h| h.omega).fold(0.0, f64::max)
    }
}

/// Splits the central `coverage` fraction of the spectral power into `bins`
/// bins of equal power.
///
/// Tails are split symmetrically: the covered power fractions run from
/// `(1 − coverage)/2` to `1 − (1 − coverage)/2`. Each representative
/// frequency is the point of its bin where `S(f_q) Δf_q` equals the exact bin
/// power, so that `H_q = 2√(2 S(f_q) Δf_q)` carries exactly that power. When
/// the bin straddles the spectral peak and two such points exist, the one
/// closest to the bin's median power fraction is used.
pub fn discretize_equal_power(
    p: &SpectrumParams,
    bins: usize,
    coverage: f64,
    water_depth: f64,
    gravity: f64,
    component: usize,
) -> Result<Vec<Harmonic>> {
    if bins == 0 {
        return Err(Error::Domain("at least one frequency bin is required".into()));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::Domain(format!("coverage must lie in (0, 1), got {coverage}")));
    }
    let tail = 0.5 * (1.0 - coverage);
    let step = coverage / bins as f64;
    let bin_power = p.total_variance() * step;
    let edges = (0..=bins)
        .map(|i| pm_inverse_cdf(tail + step * i as f64, p))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(bins);
    for i in 0..bins {
        let (lo, hi) = (edges[i], edges[i + 1]);
        let width = hi - lo;
        let median = pm_inverse_cdf(tail + step * (i as f64 + 0.5), p)?;
        let frequency = mean_value_frequency(p, lo, hi, bin_power / width, median)?;
        let density = pm_density(frequency, p)?;
        let height = 2.0 * (2.0 * density * width).sqrt();
        let omega = 2.0 * PI * frequency;
        out.push(Harmonic {
            component,
            frequency,
            width,
            omega,
            wave_number: dispersion_solve(omega, water_depth, gravity)?,
            amplitude: 0.5 * height,
        });
    }
    Ok(out)
}

/// Frequency in `[lo, hi]` where the density equals `level`.
fn mean_value_frequency(p: &SpectrumParams, lo: f64, hi: f64, level: f64, prefer: f64) -> Result<f64> {
    let fp = p.peak_frequency;
    let mut pieces = Vec::with_capacity(2);
    if lo < fp {
        pieces.push((lo, hi.min(fp)));
    }
    if hi > fp {
        pieces.push((lo.max(fp), hi));
    }
    let mut best: Option<f64> = None;
    for (a, b) in pieces {
        let fa = pm_density(a, p)? - level;
        let fb = pm_density(b, p)? - level;
        if fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum() {
            let root = bisect(|f| pm_density(f, p).map(|s| s - level).unwrap_or(f64::NAN), a, b, fa);
            best = match best {
                Some(prev) if (prev - prefer).abs() <= (root - prefer).abs() => Some(prev),
                _ => Some(root),
            };
        }
    }
    best.ok_or_else(|| Error::Numerical(format!("no mean-value frequency in bin [{lo}, {hi}]")))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Surface elevation `η(t) = Σ a_q cos[k_q (x cosθ + y sinθ) − ω_q t + φ_q]`.
///
/// `direction.thetas` holds one direction per climate component; every
/// harmonic uses the direction of its own component.
pub fn realize_timeseries(
    grid: &SpectralGrid,
    direction: &DirectionSample,
    phases: &[f64],
    position: (f64, f64),
    times: &[f64],
) -> Result<Vec<f64>> {
    if phases.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: phases.len(),
        });
    }
    if direction.thetas.len() != grid.components {
        return Err(Error::Dimension {
            expected: grid.components,
            got: direction.thetas.len(),
        });
    }
    let spatial: Vec<f64> = grid
        .harmonics
        .iter()
        .zip(phases)
        .map(|(h, &phi)| {
            let theta = direction.thetas[h.component];
            h.wave_number * (position.0 * theta.cos() + position.1 * theta.sin()) + phi
        })
        .collect();
    Ok(times
        .iter()
        .map(|&t| {
            grid.harmonics
                .iter()
                .zip(&spatial)
                .map(|(h, &psi)| h.amplitude * (psi - h.omega * t).cos())
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn case1() -> SpectrumParams {
        SpectrumParams::from_peak_period(1.53, 5.83).unwrap()
    }

    fn bins(n: usize) -> Vec<Harmonic> {
        discretize_equal_power(&case1(), n, 0.999, 50.0, 9.81, 0).unwrap()
    }

    #[test]
    fn single_bin_spans_covered_region() {
        let p = case1();
        let h = bins(1);
        assert_eq!(h.len(), 1);
        let lo = pm_inverse_cdf(0.0005, &p).unwrap();
        let hi = pm_inverse_cdf(0.9995, &p).unwrap();
        assert_relative_eq!(h[0].width, hi - lo, max_relative = 1e-14);
        assert!(h[0].frequency > lo && h[0].frequency < hi);
    }

    #[test]
    fn bin_products_are_equal() {
        let h = bins(30);
        let products: Vec<f64> = h.iter().map(|b| pm_density(b.frequency, &case1()).unwrap() * b.width).collect();
        let mean = products.iter().sum::<f64>() / products.len() as f64;
        for v in &products {
            assert!((v - mean).abs() / mean < 0.10);
        }
    }

    #[test]
    fn discrete_variance_matches_covered_power() {
        let h = bins(30);
        let var: f64 = h.iter().map(|b| b.height().powi(2) / 8.0).sum();
        let target = 0.999 * 1.53f64.powi(2) / 16.0;
        assert!((var - target).abs() / target < 0.05);
    }

    #[test]
    fn exact_bin_powers_are_identical() {
        let p = case1();
        for n in [1, 7, 30] {
            let h = discretize_equal_power(&p, n, 0.999, 50.0, 9.81, 0).unwrap();
            let edges: Vec<f64> = (0..=n).map(|i| pm_inverse_cdf(0.0005 + 0.999 * i as f64 / n as f64, &p).unwrap()).collect();
            let powers: Vec<f64> = edges.windows(2).map(|w| pm_cdf(w[1], &p).unwrap() - pm_cdf(w[0], &p).unwrap()).collect();
            for v in &powers {
                assert!((v - powers[0]).abs() / powers[0] < 1e-12);
            }
            // the discrete harmonics carry exactly those powers
            for (b, &pw) in h.iter().zip(&powers) {
                assert_relative_eq!(0.5 * b.amplitude * b.amplitude, pw * p.total_variance(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn grid_invariants() {
        let climate = WaveClimate::single(case1(), SpreadingParams::new(0.0, 5.0).unwrap(), 50.0).unwrap();
        let grid = SpectralGrid::build(&climate, 30, 0.999).unwrap();
        for w in grid.harmonics.windows(2) {
            assert!(w[1].frequency > w[0].frequency);
        }
        for h in &grid.harmonics {
            assert!(h.amplitude > 0.0);
            let rel = (h.omega.powi(2) - 9.81 * h.wave_number * (h.wave_number * 50.0).tanh()).abs() / h.omega.powi(2);
            assert!(rel < 1e-10);
        }
    }

    #[test]
    fn realization_identities() {
        let climate = WaveClimate::single(case1(), SpreadingParams::new(0.0, 5.0).unwrap(), 50.0).unwrap();
        let grid = SpectralGrid::build(&climate, 1, 0.999).unwrap();
        let dir = DirectionSample::fixed(vec![0.3]);
        let eta = realize_timeseries(&grid, &dir, &[0.0], (0.0, 0.0), &[0.0]).unwrap();
        assert_relative_eq!(eta[0], grid.harmonics[0].height() / 2.0, max_relative = 1e-15);

        let grid = SpectralGrid::build(&climate, 12, 0.999).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phases: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let shifted: Vec<f64> = phases.iter().map(|p| p + PI).collect();
        let times: Vec<f64> = (0..100).map(|i| 0.37 * i as f64).collect();
        let a = realize_timeseries(&grid, &dir, &phases, (3.0, -2.0), &times).unwrap();
        let b = realize_timeseries(&grid, &dir, &shifted, (3.0, -2.0), &times).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn realization_variance_matches_spectrum() {
        let climate = WaveClimate::single(case1(), SpreadingParams::new(0.0, 5.0).unwrap(), 50.0).unwrap();
        let grid = SpectralGrid::build(&climate, 30, 0.999).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let phases: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let tp = climate.dominant_peak_period();
        let dt = 2.0 * PI / grid.max_omega() / 20.0;
        let n = (400.0 * tp / dt) as usize;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let eta = realize_timeseries(&grid, &DirectionSample::fixed(vec![0.0]), &phases, (0.0, 0.0), &times).unwrap();
        let mean = eta.iter().sum::<f64>() / n as f64;
        let var = eta.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - grid.variance()).abs() / grid.variance() < 0.02, "{var} vs {}", grid.variance());
    }
}
