//! Frequency-dependent hydrodynamic coefficients of the array.
//!
//! A [`HydroDB`] holds, for every harmonic of a [`SpectralGrid`], the
//! added-mass matrix `A_q`, the radiation-damping matrix `B_q` and the
//! excitation model. It is built either by [`synthetic_hydro`] or read from
//! coefficient files with [`load_hydro_db`].

mod file;
mod surrogate;

pub use file::{load_hydro_db, write_hydro_db};
pub use surrogate::{synthetic_hydro, SurrogateDevice, SurrogateParams};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::climate::{DirectionSample, SpectralGrid};
use crate::error::{Error, Result};

/// Heaving device: position, dimensions and assembled mass/stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub x: f64,
    pub y: f64,
    /// Radius `r_ℓ` (m).
    pub radius: f64,
    /// Draft `d_ℓ` (m).
    pub draft: f64,
    /// Total oscillating mass `m_ℓ` (kg).
    pub mass: f64,
    /// Combined hydrostatic and mechanical stiffness `k_ℓ` (N/m).
    pub stiffness: f64,
}

impl DeviceGeometry {
    /// Floating cylinder: displaced water plus generator mass, waterplane
    /// stiffness plus (optionally) generator stiffness.
    pub fn cylinder(
        position: (f64, f64),
        radius: f64,
        draft: f64,
        generator_mass: f64,
        generator_stiffness: f64,
        include_generator_stiffness: bool,
        water_density: f64,
        gravity: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) || !(draft > 0.0) {
            return Err(Error::Geometry(format!(
                "radius and draft must be positive (got {radius}, {draft})"
            )));
        }
        let displaced = water_density * PI * radius * radius * draft;
        let mut stiffness = hydrostatic_stiffness(radius, water_density, gravity);
        if include_generator_stiffness {
            stiffness += generator_stiffness;
        }
        Ok(Self {
            x: position.0,
            y: position.1,
            radius,
            draft,
            mass: displaced + generator_mass,
            stiffness,
        })
    }

    pub fn distance(&self, other: &DeviceGeometry) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Copy moved to the origin.
    pub fn isolated(&self) -> Self {
        Self { x: 0.0, y: 0.0, ..*self }
    }
}

/// Waterplane stiffness `ρ g π r²` (N/m).
pub fn hydrostatic_stiffness(radius: f64, water_density: f64, gravity: f64) -> f64 {
    water_density * gravity * PI * radius * radius
}

/// Rejects coincident or overlapping devices.
pub fn check_layout(devices: &[DeviceGeometry]) -> Result<()> {
    if devices.is_empty() {
        return Err(Error::Geometry("at least one device is required".into()));
    }
    for (i, a) in devices.iter().enumerate() {
        for (j, b) in devices.iter().enumerate().skip(i + 1) {
            let d = a.distance(b);
            if d <= a.radius + b.radius {
                return Err(Error::Geometry(format!(
                    "devices {i} and {j} overlap (center distance {d} m, radii {} and {})",
                    a.radius, b.radius
                )));
            }
        }
    }
    Ok(())
}

/// How the excitation force depends on direction.
#[derive(Debug, Clone, PartialEq)]
pub enum ExcitationModel {
    /// `f_ℓ(ω_q)` at the device center, shifted by the incident plane-wave phase.
    PlaneWave {
        /// `[q][ℓ]` complex reference amplitude (N per m of wave amplitude).
        reference: Vec<Vec<Complex64>>,
    },
    /// Angle-tabulated force per unit amplitude, interpolated on
    /// (magnitude, unwrapped phase).
    Tabulated {
        /// Sorted, strictly increasing directions (rad).
        thetas: Vec<f64>,
        /// `[q][ℓ][θ]` magnitudes.
        magnitude: Vec<Vec<Vec<f64>>>,
        /// `[q][ℓ][θ]` phases, unwrapped along θ.
        phase: Vec<Vec<Vec<f64>>>,
    },
}

/// Hydrodynamic coefficients aligned with the harmonics of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroDB {
    pub omegas: Vec<f64>,
    pub added_mass: Vec<DMatrix<f64>>,
    pub damping: Vec<DMatrix<f64>>,
    pub excitation: ExcitationModel,
}

impl HydroDB {
    pub fn bodies(&self) -> usize {
        self.added_mass.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn frequencies(&self) -> usize {
        self.omegas.len()
    }

    /// Coefficients of body `l` alone: the `1×1` diagonal blocks and its
    /// excitation column.
    pub fn restrict(&self, l: usize) -> Result<HydroDB> {
        if l >= self.bodies() {
            return Err(Error::Dimension {
                expected: self.bodies(),
                got: l + 1,
            });
        }
        let block = |m: &DMatrix<f64>| DMatrix::from_element(1, 1, m[(l, l)]);
        let excitation = match &self.excitation {
            ExcitationModel::PlaneWave { reference } => ExcitationModel::PlaneWave {
                reference: reference.iter().map(|r| vec![r[l]]).collect(),
            },
            ExcitationModel::Tabulated {
                thetas,
                magnitude,
                phase,
            } => ExcitationModel::Tabulated {
                thetas: thetas.clone(),
                magnitude: magnitude.iter().map(|m| vec![m[l].clone()]).collect(),
                phase: phase.iter().map(|p| vec![p[l].clone()]).collect(),
            },
        };
        Ok(HydroDB {
            omegas: self.omegas.clone(),
            added_mass: self.added_mass.iter().map(block).collect(),
            damping: self.damping.iter().map(block).collect(),
            excitation,
        })
    }

    /// Checks that the coefficient frequencies match the grid to relative 1e-9.
    pub fn check_grid(&self, grid: &SpectralGrid) -> Result<()> {
        if self.omegas.len() != grid.len() {
            return Err(Error::Schema(format!(
                "coefficient set has {} frequencies, grid has {}",
                self.omegas.len(),
                grid.len()
            )));
        }
        for (q, (a, h)) in self.omegas.iter().zip(&grid.harmonics).enumerate() {
            if (a - h.omega).abs() > 1e-9 * h.omega {
                return Err(Error::Schema(format!(
                    "frequency {q}: coefficients at {a} rad/s, grid at {} rad/s",
                    h.omega
                )));
            }
        }
        Ok(())
    }

    /// Symmetry of `A_q` and `B_q`, PSD of `B_q` (minimum eigenvalue ≥ −1e-8‖B_q‖).
    pub fn validate(&self) -> Result<()> {
        let n = self.bodies();
        for q in 0..self.omegas.len() {
            let (a, b) = (&self.added_mass[q], &self.damping[q]);
            if a.shape() != (n, n) || b.shape() != (n, n) {
                return Err(Error::Schema(format!("frequency {q}: matrices are not {n}x{n}")));
            }
            if relative_asymmetry(a) > 1e-8 || relative_asymmetry(b) > 1e-8 {
                return Err(Error::Data(format!("frequency {q}: coefficient matrices are not symmetric")));
            }
            let (min, norm) = eigen_extent(b);
            if min < -1e-8 * norm {
                return Err(Error::Data(format!(
                    "frequency {q}: radiation damping has eigenvalue {min} (norm {norm})"
                )));
            }
        }
        Ok(())
    }
}

/// `‖M − Mᵀ‖_F / ‖M‖_F` (zero for the zero matrix).
pub(crate) fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Smallest eigenvalue and spectral norm of a symmetric matrix.
pub(crate) fn eigen_extent(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (min, norm)
}

/// Projection onto the PSD cone by clipping negative eigenvalues at zero.
pub(crate) fn clip_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    0.5 * (&out + out.transpose())
}

fn plane_wave_phase(k: f64, device: &DeviceGeometry, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, k * (device.x * theta.cos() + device.y * theta.sin()))
}

/// Incident complex elevation `a_q exp[i k_q (x cosθ + y sinθ)]` at a device center.
pub fn incident_amplitude_at(
    device: &DeviceGeometry,
    grid: &SpectralGrid,
    q: usize,
    direction: &DirectionSample,
) -> Complex64 {
    let h = &grid.harmonics[q];
    let theta = direction.thetas[h.component];
    h.amplitude * plane_wave_phase(h.wave_number, device, theta)
}

/// Complex excitation force on every device for harmonic `q`.
pub fn excitation_force(
    db: &HydroDB,
    grid: &SpectralGrid,
    devices: &[DeviceGeometry],
    q: usize,
    direction: &DirectionSample,
) -> Result<Vec<Complex64>> {
    let h = &grid.harmonics[q];
    let theta = direction.thetas[h.component];
    match &db.excitation {
        ExcitationModel::PlaneWave { reference } => Ok(devices
            .iter()
            .zip(&reference[q])
            .map(|(dev, &f)| h.amplitude * f * plane_wave_phase(h.wave_number, dev, theta))
            .collect()),
        ExcitationModel::Tabulated {
            thetas,
            magnitude,
            phase,
        } => {
            let (lo, hi) = (thetas[0], thetas[thetas.len() - 1]);
            if !(theta >= lo && theta <= hi) {
                return Err(Error::Extrapolation { theta, min: lo, max: hi });
            }
            let j = match thetas.partition_point(|&t| t <= theta) {
                0 => 0,
                p if p >= thetas.len() => thetas.len() - 2,
                p => p - 1,
            };
            let t = if thetas.len() == 1 {
                0.0
            } else {
                (theta - thetas[j]) / (thetas[j + 1] - thetas[j])
            };
            Ok((0..devices.len())
                .map(|l| {
                    let (m, p) = (&magnitude[q][l], &phase[q][l]);
                    let (mag, ph) = if thetas.len() == 1 {
                        (m[0], p[0])
                    } else {
                        (m[j] + t * (m[j + 1] - m[j]), p[j] + t * (p[j + 1] - p[j]))
                    };
                    h.amplitude * Complex64::from_polar(mag, ph)
                })
                .collect())
        }
    }
}

/// Unwraps a phase sequence so consecutive differences lie in (−π, π].
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            let mut d = p - prev;
            while d > PI {
                d -= 2.0 * PI;
                offset -= 2.0 * PI;
            }
            while d <= -PI {
                d += 2.0 * PI;
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::climate::{SpectrumParams, SpreadingParams, WaveClimate};
    use approx::assert_relative_eq;

    fn grid() -> SpectralGrid {
        let climate = WaveClimate::single(
            SpectrumParams::from_peak_period(1.53, 5.83).unwrap(),
            SpreadingParams::new(0.0, 5.0).unwrap(),
            50.0,
        )
        .unwrap();
        SpectralGrid::build(&climate, 10, 0.999).unwrap()
    }

    fn device(x: f64, y: f64) -> DeviceGeometry {
        DeviceGeometry::cylinder((x, y), 2.5, 0.5, 2560.0, 4000.0, true, 1025.0, 9.81).unwrap()
    }

    #[test]
    fn restriction_matches_single_body_surrogate() {
        use crate::hydro::surrogate::{synthetic_hydro, SurrogateParams};
        let g = grid();
        let devs = [device(0.0, 0.0), device(12.0, 5.0), device(-9.0, 20.0)];
        let db = synthetic_hydro(&devs, &g, &SurrogateParams::for_cylinders(&devs, 1025.0, 9.81)).unwrap();
        let one = [devs[1].isolated()];
        let single = synthetic_hydro(&one, &g, &SurrogateParams::for_cylinders(&one, 1025.0, 9.81)).unwrap();
        let r = db.restrict(1).unwrap();
        assert_eq!(r.bodies(), 1);
        for q in 0..g.len() {
            assert_relative_eq!(r.added_mass[q][(0, 0)], single.added_mass[q][(0, 0)], max_relative = 1e-12);
            assert_relative_eq!(r.damping[q][(0, 0)], single.damping[q][(0, 0)], max_relative = 1e-10);
        }
        assert_eq!(r.excitation, single.excitation);
        assert!(db.restrict(3).is_err());
    }

    #[test]
    fn hydrostatic_stiffness_values() {
        let k = hydrostatic_stiffness(2.5, 1025.0, 9.81);
        assert!((k - 1.974e5).abs() / 1.974e5 < 1e-3);
        assert_relative_eq!(hydrostatic_stiffness(5.0, 1025.0, 9.81), 4.0 * k, max_relative = 1e-15);
        let d = device(0.0, 0.0);
        assert!((d.stiffness - 2.014e5).abs() / 2.014e5 < 1e-3);
        let without = DeviceGeometry::cylinder((0.0, 0.0), 2.5, 0.5, 2560.0, 4000.0, false, 1025.0, 9.81).unwrap();
        assert_relative_eq!(without.stiffness, k);
    }

    #[test]
    fn mass_is_displaced_plus_generator() {
        let d = device(0.0, 0.0);
        assert_relative_eq!(d.mass, 1025.0 * PI * 6.25 * 0.5 + 2560.0, max_relative = 1e-15);
    }

    #[test]
    fn incident_amplitude_identities() {
        let g = grid();
        let dir = DirectionSample::fixed(vec![0.7]);
        let origin = device(0.0, 0.0);
        let off = device(13.0, -4.0);
        for q in 0..g.len() {
            assert_eq!(incident_amplitude_at(&origin, &g, q, &dir), Complex64::new(g.harmonics[q].amplitude, 0.0));
            assert_relative_eq!(incident_amplitude_at(&off, &g, q, &dir).norm(), g.harmonics[q].amplitude, max_relative = 1e-14);
            // translation by dx multiplies by exp(i k dx cosθ)
            let dx = 7.5;
            let moved = DeviceGeometry { x: off.x + dx, ..off };
            let expected = incident_amplitude_at(&off, &g, q, &dir)
                * Complex64::from_polar(1.0, g.harmonics[q].wave_number * dx * 0.7f64.cos());
            let got = incident_amplitude_at(&moved, &g, q, &dir);
            assert!((got - expected).norm() < 1e-12 * expected.norm());
        }
    }

    #[test]
    fn layout_check() {
        assert!(check_layout(&[device(0.0, 0.0), device(10.0, 0.0)]).is_ok());
        assert!(check_layout(&[device(0.0, 0.0), device(0.0, 0.0)]).is_err());
        assert!(check_layout(&[device(0.0, 0.0), device(4.9, 0.0)]).is_err());
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.0, -2.5, 2.9, 2.0];
        let u = unwrap_phase(&raw);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() <= PI);
        }
        for (a, b) in raw.iter().zip(&u) {
            let d = (a - b) / (2.0 * PI);
            assert!((d - d.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_clip_is_identity_on_psd_input() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let c = clip_psd(&m);
        assert!((c - &m).norm() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let c = clip_psd(&bad);
        let (min, _) = eigen_extent(&c);
        assert!(min > -1e-12);
    }
}
