//! Two-parameter Pierson–Moskowitz frequency spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Significant wave height and peak frequency of one spectral component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    /// Significant wave height `Hs` (m).
    pub significant_wave_height: f64,
    /// Peak frequency `f_p` (Hz).
    pub peak_frequency: f64,
}

impl SpectrumParams {
    pub fn new(significant_wave_height: f64, peak_frequency: f64) -> Result<Self> {
        if !(significant_wave_height > 0.0) || !significant_wave_height.is_finite() {
            return Err(Error::Domain(format!(
                "significant wave height must be positive, got {significant_wave_height}"
            )));
        }
        if !(peak_frequency > 0.0) || !peak_frequency.is_finite() {
            return Err(Error::Domain(format!(
                "peak frequency must be positive, got {peak_frequency}"
            )));
        }
        Ok(Self {
            significant_wave_height,
            peak_frequency,
        })
    }

    pub fn from_peak_period(significant_wave_height: f64, peak_period: f64) -> Result<Self> {
        if !(peak_period > 0.0) {
            return Err(Error::Domain(format!(
                "peak period must be positive, got {peak_period}"
            )));
        }
        Self::new(significant_wave_height, 1.0 / peak_period)
    }

    pub fn peak_period(&self) -> f64 {
        1.0 / self.peak_frequency
    }

    /// Exponent coefficient `(5/4) f_p⁴`.
    pub fn gamma2(&self) -> f64 {
        1.25 * self.peak_frequency.powi(4)
    }

    /// Amplitude coefficient `γ₂ Hs² / 4`.
    pub fn gamma1(&self) -> f64 {
        self.gamma2() * self.significant_wave_height.powi(2) / 4.0
    }

    /// Zeroth spectral moment `Hs²/16` (m²).
    pub fn total_variance(&self) -> f64 {
        self.significant_wave_height.powi(2) / 16.0
    }
}

/// Spectral density `S(f) = γ₁ f⁻⁵ exp(−γ₂ f⁻⁴)` in m²/Hz.
pub fn pm_density(f: f64, p: &SpectrumParams) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {f}")));
    }
    // log form avoids inf * 0 as f -> 0+
    let log_s = p.gamma1().ln() - 5.0 * f.ln() - p.gamma2() / f.powi(4);
    Ok(log_s.exp())
}

/// Fraction of the spectral power below `f`: `exp(−γ₂ f⁻⁴)`.
pub fn pm_cdf(f: f64, p: &SpectrumParams) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {f}")));
    }
    Ok((-p.gamma2() / f.powi(4)).exp())
}

/// Frequency below which the fraction `p_frac` of the power lies.
pub fn pm_inverse_cdf(p_frac: f64, p: &SpectrumParams) -> Result<f64> {
    if !(p_frac > 0.0 && p_frac < 1.0) {
        return Err(Error::Domain(format!(
            "power fraction must lie in (0, 1), got {p_frac}"
        )));
    }
    Ok((-p.gamma2() / p_frac.ln()).powf(0.25))
}
