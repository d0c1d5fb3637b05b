//! Analytic stand-in for boundary-element coefficients.
//!
//! Diagonal terms are smooth closed forms; cross terms follow the
//! point-absorber interaction pattern (`J₀` for damping, `Y₀` for added mass),
//! and every damping matrix is projected onto the PSD cone.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{clip_psd, DeviceGeometry, ExcitationModel, HydroDB};
use crate::climate::SpectralGrid;
use crate::error::{Error, Result};

/// Surrogate scales for one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateDevice {
    /// Infinite-frequency added mass `a∞` (kg); `A(0) = 2 a∞`.
    pub added_mass_inf: f64,
    /// Peak radiation damping `b₀` (kg/s), reached at `peak_frequency`.
    pub damping_peak: f64,
    /// Angular frequency `ω₀` of the damping peak (rad/s).
    pub peak_frequency: f64,
    /// Excitation calibration `κ` in `f(ω) = κ √B(ω) g / ω`.
    pub excitation_gain: f64,
}

impl SurrogateDevice {
    /// Default calibration for a floating cylinder.
    ///
    /// `ω₀ = √(g / 2r)`; the damping peak and the gain are chosen so that at
    /// `ω₀` the excitation equals the Froude–Krylov heave force
    /// `ρ g π r² exp(−k₀ d)` and the deep-water Haskind relation
    /// `B = ω³ |f|² / (2 ρ g³)` holds there.
    pub fn for_cylinder(device: &DeviceGeometry, water_density: f64, gravity: f64) -> Self {
        let (rho, g) = (water_density, gravity);
        let r = device.radius;
        let omega0 = (0.5 * g / r).sqrt();
        let k0 = omega0 * omega0 / g;
        let froude_krylov = rho * g * PI * r * r * (-k0 * device.draft).exp();
        Self {
            added_mass_inf: 2.0 / 3.0 * rho * r.powi(3),
            damping_peak: omega0.powi(3) * froude_krylov.powi(2) / (2.0 * rho * g.powi(3)),
            peak_frequency: omega0,
            excitation_gain: (2.0 * rho * g / omega0).sqrt(),
        }
    }

    /// `A_ℓℓ(ω) = a∞ (1 + 1/(1 + (ω/ω₀)²))`.
    pub fn added_mass(&self, omega: f64) -> f64 {
        let x = omega / self.peak_frequency;
        self.added_mass_inf * (1.0 + 1.0 / (1.0 + x * x))
    }

    /// `B_ℓℓ(ω) = b₀ (ω/ω₀)³ exp(3/2 (1 − (ω/ω₀)²))`.
    pub fn damping(&self, omega: f64) -> f64 {
        let x = omega / self.peak_frequency;
        self.damping_peak * x.powi(3) * (1.5 * (1.0 - x * x)).exp()
    }

    /// Excitation reference amplitude `κ √B(ω) g / ω` (N/m).
    pub fn excitation(&self, omega: f64, gravity: f64) -> f64 {
        self.excitation_gain * self.damping(omega).sqrt() * gravity / omega
    }
}

/// Per-device surrogate scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    pub devices: Vec<SurrogateDevice>,
    pub gravity: f64,
}

impl SurrogateParams {
    pub fn for_cylinders(devices: &[DeviceGeometry], water_density: f64, gravity: f64) -> Self {
        Self {
            devices: devices
                .iter()
                .map(|d| SurrogateDevice::for_cylinder(d, water_density, gravity))
                .collect(),
            gravity,
        }
    }
}

/// Relative Frobenius size of the PSD clipping correction, per frequency.
pub(crate) fn clipping_perturbation(raw: &DMatrix<f64>, clipped: &DMatrix<f64>) -> f64 {
    let n = raw.norm();
    if n == 0.0 {
        0.0
    } else {
        (raw - clipped).norm() / n
    }
}

/// Raw (unclipped) damping matrix at `omega`.
pub(crate) fn raw_damping(devices: &[DeviceGeometry], params: &SurrogateParams, omega: f64, k: f64) -> DMatrix<f64> {
    let n = devices.len();
    let diag: Vec<f64> = params.devices.iter().map(|p| p.damping(omega)).collect();
    DMatrix::from_fn(n, n, |l, m| {
        if l == m {
            diag[l]
        } else {
            (diag[l] * diag[m]).sqrt() * libm::j0(k * devices[l].distance(&devices[m]))
        }
    })
}

/// Builds a coefficient set for `devices` on the harmonics of `grid`.
pub fn synthetic_hydro(devices: &[DeviceGeometry], grid: &SpectralGrid, params: &SurrogateParams) -> Result<HydroDB> {
    if params.devices.len() != devices.len() {
        return Err(Error::Dimension {
            expected: devices.len(),
            got: params.devices.len(),
        });
    }
    for (i, a) in devices.iter().enumerate() {
        for (j, b) in devices.iter().enumerate().skip(i + 1) {
            if a.distance(b) < 1e-6 {
                return Err(Error::Geometry(format!("devices {i} and {j} are coincident")));
            }
        }
    }
    let n = devices.len();
    let mut added_mass = Vec::with_capacity(grid.len());
    let mut damping = Vec::with_capacity(grid.len());
    let mut reference = Vec::with_capacity(grid.len());
    for h in &grid.harmonics {
        let (omega, k) = (h.omega, h.wave_number);
        let diag_b: Vec<f64> = params.devices.iter().map(|p| p.damping(omega)).collect();
        let a = DMatrix::from_fn(n, n, |l, m| {
            if l == m {
                params.devices[l].added_mass(omega)
            } else {
                -(diag_b[l] * diag_b[m]).sqrt() / omega * libm::y0(k * devices[l].distance(&devices[m]))
            }
        });
        let raw = raw_damping(devices, params, omega, k);
        let b = clip_psd(&raw);
        let change = clipping_perturbation(&raw, &b);
        if change > 1e-12 {
            log::debug!("surrogate damping at {omega} rad/s clipped to PSD (relative change {change:e})");
        }
        added_mass.push(a);
        damping.push(b);
        reference.push(
            params
                .devices
                .iter()
                .map(|p| Complex64::new(p.excitation(omega, params.gravity), 0.0))
                .collect(),
        );
    }
    let db = HydroDB {
        omegas: grid.omegas(),
        added_mass,
        damping,
        excitation: ExcitationModel::PlaneWave { reference },
    };
    db.validate()?;
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::climate::{DirectionSample, SpectrumParams, SpreadingParams, WaveClimate};
    use crate::hydro::{eigen_extent, excitation_force};
    use approx::assert_relative_eq;

    fn grid(n: usize) -> SpectralGrid {
        let climate = WaveClimate::single(
            SpectrumParams::from_peak_period(1.53, 5.83).unwrap(),
            SpreadingParams::new(0.0, 5.0).unwrap(),
            50.0,
        )
        .unwrap();
        SpectralGrid::build(&climate, n, 0.999).unwrap()
    }

    fn cyl(x: f64, y: f64) -> DeviceGeometry {
        DeviceGeometry::cylinder((x, y), 2.5, 0.5, 2560.0, 4000.0, true, 1025.0, 9.81).unwrap()
    }

    /// Two concentric arcs of 8 and 7 devices facing the incoming waves.
    pub(crate) fn arc_layout() -> Vec<DeviceGeometry> {
        let mut out = Vec::new();
        for (radius, count) in [(60.0, 8usize), (80.0, 7usize)] {
            let span = 100f64.to_radians();
            for i in 0..count {
                let a = PI - 0.5 * span + span * i as f64 / (count - 1) as f64;
                out.push(cyl(radius * a.cos() + 70.0, radius * a.sin()));
            }
        }
        out
    }

    #[test]
    fn single_device_damping_positive() {
        let g = grid(30);
        let devs = [cyl(0.0, 0.0)];
        let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
        let db = synthetic_hydro(&devs, &g, &params).unwrap();
        for b in &db.damping {
            assert_eq!(b.shape(), (1, 1));
            assert!(b[(0, 0)] > 0.0);
        }
        assert_eq!(params.devices[0].damping(0.0), 0.0);
        // peak at ω₀
        let p = params.devices[0];
        assert!(p.damping(p.peak_frequency) > p.damping(p.peak_frequency * 1.01));
        assert!(p.damping(p.peak_frequency) > p.damping(p.peak_frequency * 0.99));
    }

    #[test]
    fn interaction_decays_with_distance() {
        let g = grid(10);
        let mut prev = f64::INFINITY;
        for d in [1e2, 1e4, 1e6] {
            let devs = [cyl(0.0, 0.0), cyl(d, 0.0)];
            let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
            let db = synthetic_hydro(&devs, &g, &params).unwrap();
            let worst = (0..g.len())
                .map(|q| {
                    let a = db.added_mass[q][(0, 1)].abs() / db.added_mass[q][(0, 0)];
                    let b = db.damping[q][(0, 1)].abs() / db.damping[q][(0, 0)];
                    a.max(b)
                })
                .fold(0.0, f64::max);
            assert!(worst < prev);
            prev = worst;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn arc_layout_damping_is_psd_with_small_clipping() {
        let g = grid(30);
        let devs = arc_layout();
        crate::hydro::check_layout(&devs).unwrap();
        let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
        let db = synthetic_hydro(&devs, &g, &params).unwrap();
        for (q, h) in g.harmonics.iter().enumerate() {
            let raw = raw_damping(&devs, &params, h.omega, h.wave_number);
            let (min, norm) = eigen_extent(&db.damping[q]);
            assert!(min >= -1e-10 * norm);
            assert!(clipping_perturbation(&raw, &db.damping[q]) < 0.05);
            assert!(crate::hydro::relative_asymmetry(&db.added_mass[q]) == 0.0);
        }
    }

    #[test]
    fn reciprocity_shape_is_frequency_independent() {
        let g = grid(30);
        let devs = [cyl(0.0, 0.0), cyl(20.0, 5.0)];
        let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
        let db = synthetic_hydro(&devs, &g, &params).unwrap();
        let ExcitationModel::PlaneWave { reference } = &db.excitation else {
            panic!("surrogate uses plane-wave excitation")
        };
        for (l, p) in params.devices.iter().enumerate() {
            let ratio = |q: usize| {
                let w = g.harmonics[q].omega;
                reference[q][l].norm_sqr() * w * w / (p.damping(w) * 9.81 * 9.81)
            };
            for q in 0..g.len() {
                assert_relative_eq!(ratio(q), ratio(0), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn default_calibration_reproduces_froude_krylov_at_peak() {
        let d = cyl(0.0, 0.0);
        let p = SurrogateDevice::for_cylinder(&d, 1025.0, 9.81);
        let k0 = p.peak_frequency.powi(2) / 9.81;
        let fk = 1025.0 * 9.81 * PI * 6.25 * (-k0 * 0.5f64).exp();
        assert_relative_eq!(p.excitation(p.peak_frequency, 9.81), fk, max_relative = 1e-12);
        let haskind = p.peak_frequency.powi(3) * fk * fk / (2.0 * 1025.0 * 9.81f64.powi(3));
        assert_relative_eq!(p.damping(p.peak_frequency), haskind, max_relative = 1e-12);
    }

    #[test]
    fn coincident_devices_rejected() {
        let g = grid(3);
        let devs = [cyl(0.0, 0.0), cyl(0.0, 1e-9)];
        let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
        assert!(matches!(synthetic_hydro(&devs, &g, &params), Err(Error::Geometry(_))));
    }

    #[test]
    fn excitation_phase_model() {
        let g = grid(8);
        let devs = [cyl(0.0, 0.0), cyl(0.0, 15.0), cyl(30.0, 6.0), cyl(30.0, -6.0)];
        let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
        let db = synthetic_hydro(&devs, &g, &params).unwrap();
        for q in 0..g.len() {
            let h = g.harmonics[q];
            let f_ref = params.devices[0].excitation(h.omega, 9.81);
            let any = DirectionSample::fixed(vec![1.234]);
            let f = excitation_force(&db, &g, &devs, q, &any).unwrap();
            assert_relative_eq!(f[0].re, h.amplitude * f_ref, max_relative = 1e-14);
            assert!(f[0].im.abs() < 1e-12 * f[0].re);
            // mirror pair about the x-axis at θ = 0
            let f0 = excitation_force(&db, &g, &devs, q, &DirectionSample::fixed(vec![0.0])).unwrap();
            assert!((f0[2] - f0[3]).norm() < 1e-12 * f0[2].norm());
            // θ = π/2, device at (0, y): brute-force incident potential phase
            let fy = excitation_force(&db, &g, &devs, q, &DirectionSample::fixed(vec![PI / 2.0])).unwrap();
            let phase = Complex64::new(0.0, h.wave_number * 15.0).exp();
            let direct = h.amplitude * params.devices[1].excitation(h.omega, 9.81) * phase;
            assert!((fy[1] - direct).norm() < 1e-10 * direct.norm());
        }
    }

    #[test]
    fn force_magnitudes_invariant_under_rotation() {
        let g = grid(6);
        let devs = [cyl(0.0, 0.0), cyl(18.0, 4.0), cyl(-7.0, 22.0)];
        let rot = 0.6f64;
        let rotated: Vec<DeviceGeometry> = devs
            .iter()
            .map(|d| DeviceGeometry {
                x: d.x * rot.cos() - d.y * rot.sin(),
                y: d.x * rot.sin() + d.y * rot.cos(),
                ..*d
            })
            .collect();
        let params = SurrogateParams::for_cylinders(&devs, 1025.0, 9.81);
        let db = synthetic_hydro(&devs, &g, &params).unwrap();
        let db_rot = synthetic_hydro(&rotated, &g, &params).unwrap();
        let theta = 0.3;
        for q in 0..g.len() {
            let a = excitation_force(&db, &g, &devs, q, &DirectionSample::fixed(vec![theta])).unwrap();
            let b = excitation_force(&db_rot, &g, &rotated, q, &DirectionSample::fixed(vec![theta + rot])).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(x.norm(), y.norm(), max_relative = 1e-12);
                // phases transform consistently: same relative phase to device 0
                let rel_a = x / a[0];
                let rel_b = y / b[0];
                assert!((rel_a - rel_b).norm() < 1e-9);
            }
        }
    }
}
