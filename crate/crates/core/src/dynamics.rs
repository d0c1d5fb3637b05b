//! Frequency-domain heave dynamics of the array.
//!
//! For every harmonic `q` the motion amplitudes solve `Z_q(u) ζ̂_q = F̂_q` with
//!
//! ```text
//! Z_q = −ω_q² (M + A_q) − i ω_q (C + B_q) + (K + S)
//! ```
//!
//! where `C = diag(c)` and `S = diag(s)` are the generator controls.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::climate::{DirectionSample, SpectralGrid};
use crate::error::{Error, Result};
use crate::hydro::{check_layout, excitation_force, incident_amplitude_at, DeviceGeometry, HydroDB};

/// Per-device damping and stiffness, flattened as `u = [c₁..c_N, s₁..s_N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    pub damping: Vec<f64>,
    pub stiffness: Vec<f64>,
}

impl ControlVector {
    pub fn new(damping: Vec<f64>, stiffness: Vec<f64>) -> Result<Self> {
        if damping.len() != stiffness.len() {
            return Err(Error::Dimension {
                expected: damping.len(),
                got: stiffness.len(),
            });
        }
        Ok(Self { damping, stiffness })
    }

    /// Same `(c, s)` on every device.
    pub fn uniform(bodies: usize, c: f64, s: f64) -> Self {
        Self {
            damping: vec![c; bodies],
            stiffness: vec![s; bodies],
        }
    }

    pub fn from_flat(u: &[f64]) -> Result<Self> {
        if !u.len().is_multiple_of(2) || u.is_empty() {
            return Err(Error::Domain(format!("control vector of odd or zero length {}", u.len())));
        }
        let n = u.len() / 2;
        Ok(Self {
            damping: u[..n].to_vec(),
            stiffness: u[n..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.damping.iter().chain(&self.stiffness).copied().collect()
    }

    pub fn bodies(&self) -> usize {
        self.damping.len()
    }
}

/// The admissible set `c ≥ ε`, `s ≥ γ` with `γ = 0` or `γ = −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// Damping floor `ε` (N·s/m).
    pub epsilon: f64,
    /// Restrict stiffness to `s ≥ 0`.
    pub positive_stiffness: bool,
}

impl Default for Admissibility {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            positive_stiffness: false,
        }
    }
}

impl Admissibility {
    pub fn new(epsilon: f64, positive_stiffness: bool) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("damping floor must be positive (got {epsilon})")));
        }
        Ok(Self {
            epsilon,
            positive_stiffness,
        })
    }

    /// Lower bound on component `i` of a flat control of length `dim`.
    pub fn lower_bound(&self, i: usize, dim: usize) -> f64 {
        if i < dim / 2 {
            self.epsilon
        } else if self.positive_stiffness {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn project_in_place(&self, u: &mut [f64]) {
        let dim = u.len();
        for (i, v) in u.iter_mut().enumerate() {
            let lb = self.lower_bound(i, dim);
            if *v < lb || v.is_nan() {
                *v = lb;
            }
        }
    }

    /// Projection `P(u)` onto the admissible set.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        self.project_in_place(&mut v);
        v
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        let dim = u.len();
        u.iter().enumerate().all(|(i, &v)| v >= self.lower_bound(i, dim))
    }
}

/// Devices, frequency grid and hydrodynamic coefficients of one instance.
#[derive(Debug, Clone)]
pub struct ArraySystem {
    pub devices: Vec<DeviceGeometry>,
    pub grid: SpectralGrid,
    pub db: HydroDB,
}

impl ArraySystem {
    pub fn new(devices: Vec<DeviceGeometry>, grid: SpectralGrid, db: HydroDB) -> Result<Self> {
        check_layout(&devices)?;
        db.check_grid(&grid)?;
        if db.bodies() != devices.len() {
            return Err(Error::Schema(format!(
                "coefficients describe {} bodies, layout has {}",
                db.bodies(),
                devices.len()
            )));
        }
        Ok(Self { devices, grid, db })
    }

    pub fn bodies(&self) -> usize {
        self.devices.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.devices.len()
    }

    fn check_control(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

/// Impedance matrix `Z_q(u)`.
pub fn assemble_impedance(system: &ArraySystem, u: &[f64], q: usize) -> DMatrix<Complex64> {
    let n = system.bodies();
    let w = system.db.omegas[q];
    let (a, b) = (&system.db.added_mass[q], &system.db.damping[q]);
    DMatrix::from_fn(n, n, |l, m| {
        let mut re = -w * w * a[(l, m)];
        let mut im = -w * b[(l, m)];
        if l == m {
            let dev = &system.devices[l];
            re += -w * w * dev.mass + dev.stiffness + u[n + l];
            im += -w * u[l];
        }
        Complex64::new(re, im)
    })
}

/// Motion amplitudes for one direction sample, with the factorizations kept
/// for the adjoint solves.
#[derive(Debug, Clone)]
pub struct StateSolution {
    /// `ζ̂_q`, one vector per harmonic (m).
    pub amplitudes: Vec<DVector<Complex64>>,
    /// `F̂_q` (N).
    pub forcing: Vec<DVector<Complex64>>,
    /// Incident elevation `η̂_q` at device centers (m).
    pub incident: Vec<DVector<Complex64>>,
    pub direction: DirectionSample,
    pub(crate) factors: Vec<LU<Complex64, Dyn, Dyn>>,
}

impl StateSolution {
    /// Largest `‖Z_q ζ̂_q − F̂_q‖ / ‖F̂_q‖` over harmonics (zero-force harmonics
    /// use the absolute residual).
    pub fn max_residual(&self, system: &ArraySystem, u: &[f64]) -> f64 {
        (0..self.amplitudes.len())
            .map(|q| {
                let z = assemble_impedance(system, u, q);
                let r = (&z * &self.amplitudes[q] - &self.forcing[q]).norm();
                let f = self.forcing[q].norm();
                if f > 0.0 {
                    r / f
                } else {
                    r
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the state system for every harmonic.
pub fn solve_state(system: &ArraySystem, u: &[f64], direction: &DirectionSample) -> Result<StateSolution> {
    system.check_control(u)?;
    if direction.thetas.len() != system.grid.components {
        return Err(Error::Dimension {
            expected: system.grid.components,
            got: direction.thetas.len(),
        });
    }
    let per_q: Vec<_> = (0..system.grid.len())
        .into_par_iter()
        .map(|q| {
            let f = DVector::from_vec(excitation_force(&system.db, &system.grid, &system.devices, q, direction)?);
            let eta = DVector::from_iterator(
                system.bodies(),
                system.devices.iter().map(|d| incident_amplitude_at(d, &system.grid, q, direction)),
            );
            let lu = assemble_impedance(system, u, q).lu();
            let zeta = lu.solve(&f).ok_or(Error::Singular { q })?;
            if zeta.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Singular { q });
            }
            Ok((zeta, f, eta, lu))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sol = StateSolution {
        amplitudes: Vec::with_capacity(per_q.len()),
        forcing: Vec::with_capacity(per_q.len()),
        incident: Vec::with_capacity(per_q.len()),
        direction: direction.clone(),
        factors: Vec::with_capacity(per_q.len()),
    };
    for (zeta, f, eta, lu) in per_q {
        sol.amplitudes.push(zeta);
        sol.forcing.push(f);
        sol.incident.push(eta);
        sol.factors.push(lu);
    }
    Ok(sol)
}

/// Cost `J` (negative mean power) and per-device mean power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    /// `J = −½ Σ_q ω_q² ζ̂_qᴴ C ζ̂_q` (W).
    pub cost: f64,
    /// `P_ℓ = ½ Σ_q ω_q² c_ℓ |ζ̂_{qℓ}|²` (W).
    pub device_powers: Vec<f64>,
}

pub fn power(grid: &SpectralGrid, u: &[f64], sol: &StateSolution) -> PowerReport {
    let n = u.len() / 2;
    let mut device_powers = vec![0.0; n];
    for (h, zeta) in grid.harmonics.iter().zip(&sol.amplitudes) {
        let w2 = h.omega * h.omega;
        for l in 0..n {
            device_powers[l] += 0.5 * w2 * u[l] * zeta[l].norm_sqr();
        }
    }
    PowerReport {
        cost: -device_powers.iter().sum::<f64>(),
        device_powers,
    }
}

/// Slamming statistics of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceConstraint {
    /// RMS relative motion `w_rms` (m).
    pub w_rms: f64,
    /// `g = Σ_q |ζ̂ − η̂|² − 2α²d²` (m²).
    pub g: f64,
    /// `h = [g]₊²` (m⁴).
    pub h: f64,
    /// Fraction of time with `|w| > d`.
    pub time_above: f64,
    /// Narrow-band fraction of peaks above `d`.
    pub peak_exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub alpha: f64,
    pub devices: Vec<DeviceConstraint>,
}

impl ConstraintReport {
    pub fn h(&self) -> Vec<f64> {
        self.devices.iter().map(|d| d.h).collect()
    }

    pub fn g(&self) -> Vec<f64> {
        self.devices.iter().map(|d| d.g).collect()
    }
}

/// `2[1 − Φ(x)]`.
pub fn two_sided_tail(x: f64) -> f64 {
    libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Statistics of a Gaussian relative motion with RMS `w_rms` against draft `d`.
pub fn device_constraint(sum_sq: f64, draft: f64, alpha: f64) -> DeviceConstraint {
    let w_rms = (0.5 * sum_sq).sqrt();
    let g = sum_sq - 2.0 * alpha * alpha * draft * draft;
    let gp = g.max(0.0);
    let (time_above, peak_exceedance) = if w_rms > 0.0 {
        let x = draft / w_rms;
        (two_sided_tail(x), (-0.5 * x * x).exp())
    } else {
        (0.0, 0.0)
    };
    DeviceConstraint {
        w_rms,
        g,
        h: gp * gp,
        time_above,
        peak_exceedance,
    }
}

/// Slamming constraint values from the state solution.
pub fn slamming_report(sol: &StateSolution, devices: &[DeviceGeometry], alpha: f64) -> ConstraintReport {
    let devices = devices
        .iter()
        .enumerate()
        .map(|(l, dev)| {
            let sum_sq: f64 = sol
                .amplitudes
                .iter()
                .zip(&sol.incident)
                .map(|(z, e)| (z[l] - e[l]).norm_sqr())
                .sum();
            device_constraint(sum_sq, dev.draft, alpha)
        })
        .collect();
    ConstraintReport { alpha, devices }
}

/// `(Σ_q ‖ζ̂_q‖²)^{1/2}`.
pub fn motion_norm(sol: &StateSolution) -> f64 {
    sol.amplitudes.iter().map(|z| z.norm_squared()).sum::<f64>().sqrt()
}

/// Limit of `λ‖ζ̂(λu)‖` as `λ → ∞`: the motion norm of
/// `(−iωC + S)⁻¹ F̂` with the forcing stored in `sol`.
pub fn asymptotic_motion_norm(grid: &SpectralGrid, u: &[f64], sol: &StateSolution) -> f64 {
    let n = u.len() / 2;
    grid.harmonics
        .iter()
        .zip(&sol.forcing)
        .map(|(h, f)| {
            (0..n)
                .map(|l| (f[l] / Complex64::new(u[n + l], -h.omega * u[l])).norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `q = ΣP_ℓ / (N_b · P_isolated)`.
pub fn interaction_factor(device_powers: &[f64], isolated_power: f64) -> Result<f64> {
    if !(isolated_power > 0.0) {
        return Err(Error::Domain(format!("isolated power must be positive (got {isolated_power})")));
    }
    Ok(device_powers.iter().sum::<f64>() / (device_powers.len() as f64 * isolated_power))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::climate::{SpectrumParams, SpreadingParams, WaveClimate};
    use crate::hydro::{synthetic_hydro, ExcitationModel, SurrogateParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn cylinder(x: f64, y: f64, draft: f64) -> DeviceGeometry {
        DeviceGeometry::cylinder((x, y), 2.5, draft, 2560.0, 4000.0, true, 1025.0, 9.81).unwrap()
    }

    pub(crate) fn surrogate_system(positions: &[(f64, f64)], bins: usize, theta0: f64, beta: f64) -> ArraySystem {
        let climate = WaveClimate::single(
            SpectrumParams::from_peak_period(1.53, 5.83).unwrap(),
            SpreadingParams::new(theta0, beta).unwrap(),
            50.0,
        )
        .unwrap();
        let grid = SpectralGrid::build(&climate, bins, 0.999).unwrap();
        let devices: Vec<_> = positions.iter().map(|&(x, y)| cylinder(x, y, 0.5)).collect();
        let db = synthetic_hydro(&devices, &grid, &SurrogateParams::for_cylinders(&devices, 1025.0, 9.81)).unwrap();
        ArraySystem::new(devices, grid, db).unwrap()
    }

    fn random_u(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut u: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(0.0..5.0))).collect();
        u.extend((0..n).map(|_| rng.random_range(-1e5..1e5)));
        u
    }

    #[test]
    fn projection_examples() {
        let adm = Admissibility::new(1.0, true).unwrap();
        assert_eq!(adm.project(&[10.0, 0.5, -5.0, 3.0]), vec![10.0, 1.0, 0.0, 3.0]);
        let admissible = [2.0, 3.0, 0.0, 7.0];
        assert_eq!(adm.project(&admissible), admissible.to_vec());
        let free = Admissibility::new(1.0, false).unwrap();
        assert_eq!(free.project(&[0.0, 2.0, -5.0, 3.0]), vec![1.0, 2.0, -5.0, 3.0]);
        assert!(Admissibility::new(0.0, true).is_err());
    }

    #[test]
    fn scalar_impedance() {
        let sys = surrogate_system(&[(0.0, 0.0)], 5, 0.0, 5.0);
        let u = [3000.0, -200.0];
        for q in 0..5 {
            let w = sys.db.omegas[q];
            let d = &sys.devices[0];
            let expected = Complex64::new(
                -w * w * (d.mass + sys.db.added_mass[q][(0, 0)]) + d.stiffness + u[1],
                -w * (u[0] + sys.db.damping[q][(0, 0)]),
            );
            assert!((assemble_impedance(&sys, &u, q)[(0, 0)] - expected).norm() <= 1e-14 * expected.norm());
        }
    }

    #[test]
    fn impedance_parts_symmetric_and_imaginary_negative_definite() {
        let sys = surrogate_system(&[(0.0, 0.0), (20.0, 5.0), (-10.0, 30.0)], 6, 0.0, 5.0);
        let u = [100.0, 5.0, 1e4, -3e4, 2e3, 0.0];
        for q in 0..6 {
            let z = assemble_impedance(&sys, &u, q);
            let re = z.map(|v| v.re);
            let im = z.map(|v| v.im);
            assert!((&re - re.transpose()).norm() <= 1e-12 * re.norm());
            assert!((&im - im.transpose()).norm() <= 1e-12 * im.norm());
            let max_eig = nalgebra::SymmetricEigen::new(im).eigenvalues.max();
            assert!(max_eig < 0.0);
        }
    }

    #[test]
    fn invertible_for_random_admissible_controls() {
        let sys = surrogate_system(&[(0.0, 0.0), (15.0, 0.0), (7.0, 12.0)], 8, 0.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dir = DirectionSample::fixed(vec![0.3]);
        for _ in 0..1000 {
            let u = random_u(&mut rng, 3);
            let sol = solve_state(&sys, &u, &dir).unwrap();
            assert!(sol.max_residual(&sys, &u) < 1e-10);
        }
    }

    #[test]
    fn single_body_closed_form() {
        let sys = surrogate_system(&[(0.0, 0.0)], 7, 0.0, 5.0);
        let u = [2.0e4, -1.0e4];
        let dir = DirectionSample::fixed(vec![0.0]);
        let sol = solve_state(&sys, &u, &dir).unwrap();
        for q in 0..7 {
            let expected = sol.forcing[q][0] / assemble_impedance(&sys, &u, q)[(0, 0)];
            assert!((sol.amplitudes[q][0] - expected).norm() <= 1e-14 * expected.norm());
        }
    }

    #[test]
    fn zero_excitation_gives_zero_motion_and_zero_power() {
        let mut sys = surrogate_system(&[(0.0, 0.0), (12.0, 0.0)], 4, 0.0, 5.0);
        if let ExcitationModel::PlaneWave { reference } = &mut sys.db.excitation {
            for row in reference.iter_mut() {
                row.iter_mut().for_each(|f| *f = Complex64::new(0.0, 0.0));
            }
        }
        let u = [1e4, 1e4, 0.0, 0.0];
        let sol = solve_state(&sys, &u, &DirectionSample::fixed(vec![0.1])).unwrap();
        assert!(sol.amplitudes.iter().all(|z| z.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
        assert_eq!(power(&sys.grid, &u, &sol).cost, 0.0);
    }

    #[test]
    fn mirror_symmetric_devices_move_identically() {
        let sys = surrogate_system(&[(0.0, 8.0), (0.0, -8.0)], 10, 0.0, 5.0);
        let u = [3e4, 3e4, -2e4, -2e4];
        let sol = solve_state(&sys, &u, &DirectionSample::fixed(vec![0.0])).unwrap();
        for z in &sol.amplitudes {
            assert!((z[0] - z[1]).norm() <= 1e-12 * z[0].norm());
        }
    }

    #[test]
    fn power_is_negative_for_nonzero_forcing() {
        let sys = surrogate_system(&[(0.0, 0.0), (15.0, 0.0), (7.0, 12.0)], 8, 0.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = random_u(&mut rng, 3);
            let theta = rng.random_range(-1.0..1.0);
            let sol = solve_state(&sys, &u, &DirectionSample::fixed(vec![theta])).unwrap();
            let p = power(&sys.grid, &u, &sol);
            assert!(p.cost < 0.0);
            assert!((p.cost + p.device_powers.iter().sum::<f64>()).abs() <= 1e-12 * p.cost.abs());
        }
    }

    #[test]
    fn single_frequency_power_matches_time_average() {
        let sys = surrogate_system(&[(0.0, 0.0)], 1, 0.0, 5.0);
        let u = [2.5e4, 1e3];
        let sol = solve_state(&sys, &u, &DirectionSample::fixed(vec![0.0])).unwrap();
        let w = sys.grid.harmonics[0].omega;
        let z = sol.amplitudes[0][0];
        // velocity Re[−iω ζ̂ e^{−iωt}] integrated with the trapezoid rule over one period
        let n = 4000;
        let period = 2.0 * std::f64::consts::PI / w;
        let mut acc = 0.0;
        for i in 0..n {
            let t = period * i as f64 / n as f64;
            let v = (Complex64::new(0.0, -w) * z * Complex64::from_polar(1.0, -w * t)).re;
            acc += u[0] * v * v;
        }
        let mean = acc / n as f64;
        let p = power(&sys.grid, &u, &sol);
        assert!((p.device_powers[0] - mean).abs() < 1e-10 * mean);
    }

    #[test]
    fn slamming_examples() {
        let c = device_constraint(2.0 * 0.25 * 0.25, 0.5, 0.5);
        assert!((c.w_rms - 0.25).abs() < 1e-15);
        assert!((c.time_above - 0.0455).abs() < 5e-5);
        assert!((c.peak_exceedance - 0.1353).abs() < 5e-5);
        assert!(c.g.abs() < 1e-15);
        let rides = device_constraint(0.0, 0.5, 0.5);
        assert_eq!(rides.w_rms, 0.0);
        assert_eq!(rides.g, -2.0 * 0.25 * 0.25);
        assert_eq!(rides.h, 0.0);
        let w = Complex64::new(0.3, -0.4);
        let one = device_constraint(w.norm_sqr(), 0.5, 0.5);
        assert!((one.w_rms - w.norm() / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn h_vanishes_exactly_when_g_nonpositive() {
        for i in 0..200 {
            let s = 0.001 * i as f64;
            let c = device_constraint(s, 0.5, 0.5);
            assert_eq!(c.h == 0.0, c.g <= 0.0);
            assert_eq!(c.h, c.g.max(0.0).powi(2));
        }
    }

    #[test]
    fn interaction_factor_examples() {
        assert_eq!(interaction_factor(&[1.0, 2.0, 3.0], 2.0).unwrap(), 1.0);
        assert_eq!(interaction_factor(&[1.0, 1.0], 2.0).unwrap(), 0.5);
        assert!(interaction_factor(&[1.0], 0.0).is_err());
    }

    #[test]
    fn uncoupled_array_has_unit_interaction_factor() {
        let mut sys = surrogate_system(&[(0.0, 0.0), (30.0, 0.0), (0.0, 30.0)], 8, 0.0, 5.0);
        for q in 0..sys.grid.len() {
            let a = DMatrix::from_diagonal(&sys.db.added_mass[q].diagonal());
            let b = DMatrix::from_diagonal(&sys.db.damping[q].diagonal());
            sys.db.added_mass[q] = a;
            sys.db.damping[q] = b;
        }
        let u = ControlVector::uniform(3, 3e4, -2e4).to_flat();
        let dir = DirectionSample::fixed(vec![0.4]);
        let array = power(&sys.grid, &u, &solve_state(&sys, &u, &dir).unwrap());
        let single = surrogate_system(&[(0.0, 0.0)], 8, 0.0, 5.0);
        let iso = power(&single.grid, &[3e4, -2e4], &solve_state(&single, &[3e4, -2e4], &dir).unwrap());
        let qf = interaction_factor(&array.device_powers, iso.device_powers[0]).unwrap();
        assert!((qf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn motion_decays_like_inverse_scale() {
        let sys = surrogate_system(&[(0.0, 0.0), (15.0, 0.0), (7.0, 12.0)], 8, 0.0, 5.0);
        let u = [2e4, 3e4, 1e4, -1e4, 5e3, 2e4];
        let dir = DirectionSample::fixed(vec![0.2]);
        let sol = solve_state(&sys, &u, &dir).unwrap();
        let limit = asymptotic_motion_norm(&sys.grid, &u, &sol);
        let mut prev_cost = f64::INFINITY;
        for lambda in [1e2, 1e3, 1e4] {
            let scaled: Vec<f64> = u.iter().map(|v| lambda * v).collect();
            let sol = solve_state(&sys, &scaled, &dir).unwrap();
            let ratio = lambda * motion_norm(&sol) / limit;
            assert!(ratio > 0.5 && ratio < 2.0, "lambda {lambda}: {ratio}");
            let cost = power(&sys.grid, &scaled, &sol).cost.abs();
            assert!(cost < prev_cost);
            prev_cost = cost;
        }
    }

    #[test]
    fn control_vector_layout() {
        let c = ControlVector::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(c.to_flat(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ControlVector::from_flat(&c.to_flat()).unwrap(), c);
        assert!(ControlVector::new(vec![1.0], vec![]).is_err());
        assert!(ControlVector::from_flat(&[1.0, 2.0, 3.0]).is_err());
    }
}
