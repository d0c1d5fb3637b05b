//! Independent checks of the frequency-domain model: time-domain exceedance
//! statistics, randomized sweeps of the solvability and asymptotic
//! properties, and agreement between the three optimizers.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::climate::{sample_direction, DirectionSample, SpectralGrid};
use crate::dynamics::{
    asymptotic_motion_norm, device_constraint, motion_norm, power, solve_state, ArraySystem, StateSolution,
};
use crate::error::{Error, Result};
use crate::optim::{evaluate_rule, gl_rule, penalty_loop, stationarity, StochasticObjective};
use crate::problem::ArrayProblem;
use crate::rng::{SeedSequence, Stream};
use crate::scenario::{Method, Scenario};

/// Empirical against analytic slamming statistics for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceCheck {
    pub device: usize,
    pub draft: f64,
    pub analytic_w_rms: f64,
    pub analytic_time_above: f64,
    /// Narrow-band estimate, an upper bound for broad spectra.
    pub analytic_peak_exceedance: f64,
    pub empirical_w_rms: f64,
    pub empirical_time_above: f64,
    pub empirical_peak_exceedance: f64,
    /// Record length in peak periods.
    pub record_periods: f64,
    pub samples: usize,
    pub peaks: usize,
}

/// Time-domain record settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordSpec {
    pub peak_period: f64,
    /// Length in peak periods (at least 500).
    pub periods: f64,
    /// Samples per shortest wave period (at least 40).
    pub samples_per_period: usize,
    pub seed: u64,
}

impl RecordSpec {
    pub fn new(peak_period: f64, periods: f64, seed: u64) -> Self {
        Self {
            peak_period,
            periods,
            samples_per_period: 40,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.peak_period > 0.0) {
            return Err(Error::Domain(format!("peak period must be positive (got {})", self.peak_period)));
        }
        if !(self.periods >= 500.0) {
            return Err(Error::Domain(format!("record must span at least 500 peak periods (got {})", self.periods)));
        }
        if self.samples_per_period < 40 {
            return Err(Error::Domain(format!(
                "need at least 40 samples per period (got {})",
                self.samples_per_period
            )));
        }
        Ok(())
    }
}

/// `ζ̂_qℓ − η̂_qℓ` for every harmonic.
pub fn relative_motion(sol: &StateSolution, device: usize) -> Vec<num_complex::Complex64> {
    sol.amplitudes
        .iter()
        .zip(&sol.incident)
        .map(|(z, e)| z[device] - e[device])
        .collect()
}

/// Builds `w(t) = Re Σ_q ŵ_q e^{i(φ_q − ω_q t)}` with uniform random phases
/// and counts threshold exceedances against `draft`.
pub fn time_domain_exceedance(
    grid: &SpectralGrid,
    amplitudes: &[num_complex::Complex64],
    draft: f64,
    device: usize,
    record: &RecordSpec,
) -> Result<ExceedanceCheck> {
    record.validate()?;
    if amplitudes.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: amplitudes.len(),
        });
    }
    let mut rng = SeedSequence::new(record.seed).rng(Stream::Phases, device as u64);
    let phases: Vec<f64> = amplitudes.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let dt = 2.0 * PI / grid.max_omega() / record.samples_per_period as f64;
    let duration = record.periods * record.peak_period;
    let samples = (duration / dt).ceil() as usize;

    let w: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * dt;
            grid.harmonics
                .iter()
                .zip(amplitudes)
                .zip(&phases)
                .map(|((h, a), &phi)| a.norm() * (phi + a.arg() - h.omega * t).cos())
                .sum::<f64>()
        })
        .collect();

    let mean = w.iter().sum::<f64>() / samples as f64;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples as f64;
    let above = w.iter().filter(|x| x.abs() > draft).count();
    let mut peaks = 0;
    let mut peaks_above = 0;
    for i in 1..samples.saturating_sub(1) {
        if w[i] > w[i - 1] && w[i] >= w[i + 1] && w[i] > mean {
            peaks += 1;
            if w[i] > draft {
                peaks_above += 1;
            }
        }
    }
    let sum_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let analytic = device_constraint(sum_sq, draft, 1.0);
    Ok(ExceedanceCheck {
        device,
        draft,
        analytic_w_rms: analytic.w_rms,
        analytic_time_above: analytic.time_above,
        analytic_peak_exceedance: analytic.peak_exceedance,
        empirical_w_rms: var.sqrt(),
        empirical_time_above: above as f64 / samples as f64,
        empirical_peak_exceedance: if peaks > 0 { peaks_above as f64 / peaks as f64 } else { 0.0 },
        record_periods: record.periods,
        samples,
        peaks,
    })
}

/// Exceedance check for every device of `problem` at control `u` and direction `direction`.
pub fn check_exceedance(
    problem: &ArrayProblem,
    u: &[f64],
    direction: &DirectionSample,
    record: &RecordSpec,
) -> Result<Vec<ExceedanceCheck>> {
    let sol = solve_state(&problem.system, u, direction)?;
    problem
        .system
        .devices
        .iter()
        .enumerate()
        .map(|(l, d)| time_domain_exceedance(&problem.system.grid, &relative_motion(&sol, l), d.draft, l, record))
        .collect()
}

/// Sampling ranges and tolerances of [`lemma_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub trials: usize,
    /// Damping drawn log-uniformly from this range (N·s/m).
    pub damping: (f64, f64),
    /// Stiffness drawn uniformly from this range (N/m), clipped at zero in
    /// positive-stiffness mode.
    pub stiffness: (f64, f64),
    pub lambdas: Vec<f64>,
    /// Accepted range of `λ‖ζ̂(λu)‖ / ‖(−iωC + S)⁻¹F̂‖`.
    pub band: (f64, f64),
    pub residual_tolerance: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            damping: (1e3, 1e6),
            stiffness: (-1e5, 1e5),
            lambdas: vec![1e2, 1e3, 1e4],
            band: (1.0 / 3.0, 3.0),
            residual_tolerance: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Solve failed or its residual exceeded the tolerance.
    Invertibility,
    /// `J ≥ 0` with nonzero forcing.
    NonNegativeCost,
    /// `λ‖ζ̂(λu)‖` outside the band around its limit.
    Scaling,
}

/// A failed trial, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub kind: ViolationKind,
    pub u: Vec<f64>,
    pub thetas: Vec<f64>,
    pub lambda: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub max_residual: f64,
    pub max_cost: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Cost with the wave amplitudes set to zero; expected to be exactly 0.
    pub zero_forcing_cost: f64,
    pub violations: Vec<Violation>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.zero_forcing_cost == 0.0
    }
}

fn random_control<R: Rng + ?Sized>(rng: &mut R, system: &ArraySystem, adm_positive: bool, cfg: &SweepConfig) -> Vec<f64> {
    let n = system.bodies();
    let (lo, hi) = (cfg.damping.0.ln(), cfg.damping.1.ln());
    let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi).exp()).collect();
    let s_lo = if adm_positive { cfg.stiffness.0.max(0.0) } else { cfg.stiffness.0 };
    u.extend((0..n).map(|_| rng.random_range(s_lo..=cfg.stiffness.1.max(s_lo))));
    u
}

/// Checks one `(u, θ)` pair; returns the residual, cost, scaling ratios and
/// any violations.
fn check_trial(
    problem: &ArrayProblem,
    trial: usize,
    u: &[f64],
    direction: &DirectionSample,
    cfg: &SweepConfig,
) -> (f64, f64, Vec<f64>, Vec<Violation>) {
    let system = &problem.system;
    let violation = |kind, lambda, value| Violation {
        trial,
        kind,
        u: u.to_vec(),
        thetas: direction.thetas.clone(),
        lambda,
        value,
    };
    let mut out = Vec::new();
    let sol = match solve_state(system, u, direction) {
        Ok(s) => s,
        Err(_) => return (f64::INFINITY, f64::NAN, vec![], vec![violation(ViolationKind::Invertibility, None, f64::INFINITY)]),
    };
    let residual = sol.max_residual(system, u);
    if !(residual < cfg.residual_tolerance) {
        out.push(violation(ViolationKind::Invertibility, None, residual));
    }
    let cost = power(&system.grid, u, &sol).cost;
    let forced = sol.forcing.iter().any(|f| f.norm() > 0.0);
    if forced && !(cost < 0.0) {
        out.push(violation(ViolationKind::NonNegativeCost, None, cost));
    }
    let limit = asymptotic_motion_norm(&system.grid, u, &sol);
    let mut ratios = Vec::with_capacity(cfg.lambdas.len());
    for &lambda in &cfg.lambdas {
        let scaled: Vec<f64> = u.iter().map(|v| lambda * v).collect();
        let ratio = match solve_state(system, &scaled, direction) {
            Ok(s) => lambda * motion_norm(&s) / limit,
            Err(_) => f64::NAN,
        };
        if !(ratio >= cfg.band.0 && ratio <= cfg.band.1) {
            out.push(violation(ViolationKind::Scaling, Some(lambda), ratio));
        }
        ratios.push(ratio);
    }
    (residual, cost, ratios, out)
}

/// Randomized sweep of solvability, sign of the cost and the `1/λ` decay of
/// the motion under `u → λu`. Violations are reported, not raised.
pub fn lemma_sweep(problem: &ArrayProblem, cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.trials == 0 || !(cfg.damping.0 > 0.0 && cfg.damping.1 >= cfg.damping.0) {
        return Err(Error::Domain("sweep needs trials and a positive damping range".into()));
    }
    let seeds = SeedSequence::new(cfg.seed);
    let positive = problem.admissibility.positive_stiffness;
    let results: Vec<_> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds.rng(Stream::Sweep, t as u64);
            let u = problem.admissibility.project(&random_control(&mut rng, &problem.system, positive, cfg));
            let d = sample_direction(&mut rng, &problem.spreadings);
            check_trial(problem, t, &u, &d, cfg)
        })
        .collect();

    let mut report = SweepReport {
        config: cfg.clone(),
        max_residual: 0.0,
        max_cost: f64::NEG_INFINITY,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        zero_forcing_cost: 0.0,
        violations: Vec::new(),
    };
    for (residual, cost, ratios, violations) in results {
        report.max_residual = report.max_residual.max(residual);
        report.max_cost = report.max_cost.max(cost);
        for r in ratios {
            report.min_ratio = report.min_ratio.min(r);
            report.max_ratio = report.max_ratio.max(r);
        }
        report.violations.extend(violations);
    }

    let mut calm = problem.system.clone();
    for h in &mut calm.grid.harmonics {
        h.amplitude = 0.0;
    }
    let mut rng = seeds.rng(Stream::Sweep, cfg.trials as u64);
    let u = problem.admissibility.project(&random_control(&mut rng, &calm, positive, cfg));
    let d = DirectionSample::dominant(&problem.spreadings);
    let sol = solve_state(&calm, &u, &d)?;
    report.zero_forcing_cost = power(&calm.grid, &u, &sol).cost;
    Ok(report)
}

/// Re-runs a recorded violation; true when it fails again.
pub fn replay_violation(problem: &ArrayProblem, violation: &Violation, cfg: &SweepConfig) -> bool {
    let d = DirectionSample::fixed(violation.thetas.clone());
    let (_, _, _, found) = check_trial(problem, violation.trial, &violation.u, &d, cfg);
    found.iter().any(|v| v.kind == violation.kind && v.lambda == violation.lambda)
}

/// Final state of one optimizer in [`cross_method_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: Method,
    pub seed: u64,
    pub u: Vec<f64>,
    pub feasible: bool,
    pub expected_power: f64,
    pub max_expected_h: f64,
    /// Projected-gradient norm of the penalized objective under the fixed
    /// check rule, at the final penalty parameter of the SAA-GL run.
    pub stationarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub a: usize,
    pub b: usize,
    /// `‖u_a − u_b‖ / ‖u_b‖`.
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMethodReport {
    pub u0: Vec<f64>,
    pub band: f64,
    pub runs: Vec<MethodRun>,
    pub agreements: Vec<Agreement>,
    pub all_feasible: bool,
    pub within_band: bool,
    pub gl_smallest_stationarity: bool,
}

fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|y| y * y).sum::<f64>().sqrt()
}

/// Runs SA and SAA-MC for every seed and SAA-GL once, all from `u0`, and
/// compares final controls against the SAA-GL result.
pub fn cross_method_check(scenario: &Scenario, u0: &[f64], seeds: &[u64], band: f64) -> Result<CrossMethodReport> {
    if seeds.is_empty() {
        return Err(Error::Domain("cross-method check needs at least one seed".into()));
    }
    let problem = scenario.build_problem()?;
    let run = |method: Method, seed: u64| -> Result<_> {
        let mut opt = scenario.optimizer;
        opt.method = method;
        let r = penalty_loop(&problem, u0, &opt.penalty, &opt.inner_method(), seed)?;
        Ok((method, seed, r))
    };

    let mut reports = vec![run(Method::SaaGl, seeds[0])?];
    for &seed in seeds {
        reports.push(run(Method::Sa, seed)?);
        reports.push(run(Method::SaaMc, seed)?);
    }

    let cfg = &scenario.optimizer.penalty;
    let rule = gl_rule(cfg.check_nodes, problem.spreadings(), cfg.check_tail)?;
    let mu = reports[0].2.final_mu;
    let adm = problem.admissibility();
    let runs = reports
        .iter()
        .map(|(method, seed, r)| {
            let e = evaluate_rule(&problem, &r.u, &rule, mu, true)?;
            let g = e.gradient.unwrap_or_default();
            Ok(MethodRun {
                method: *method,
                seed: *seed,
                u: r.u.clone(),
                feasible: r.feasible,
                expected_power: r.expected_power,
                max_expected_h: r.max_expected_h(),
                stationarity: stationarity(&r.u, &g, &adm),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let agreements: Vec<Agreement> = (1..runs.len())
        .map(|i| Agreement {
            a: i,
            b: 0,
            relative_difference: relative_difference(&runs[i].u, &runs[0].u),
        })
        .collect();
    Ok(CrossMethodReport {
        u0: u0.to_vec(),
        band,
        all_feasible: runs.iter().all(|r| r.feasible),
        within_band: agreements.iter().all(|a| a.relative_difference <= band),
        gl_smallest_stationarity: runs.iter().skip(1).all(|r| runs[0].stationarity <= r.stationarity),
        runs,
        agreements,
    })
}

/// SAA-GL final controls for two rule sizes and their relative difference.
pub fn gl_saturation(scenario: &Scenario, u0: &[f64], n1: usize, n2: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let problem = scenario.build_problem()?;
    let run = |n: usize| -> Result<Vec<f64>> {
        let mut opt = scenario.optimizer;
        opt.method = Method::SaaGl;
        opt.saa.nodes = n;
        Ok(penalty_loop(&problem, u0, &opt.penalty, &opt.inner_method(), opt.seed)?.u)
    };
    let a = run(n1)?;
    let b = run(n2)?;
    let d = relative_difference(&a, &b);
    Ok((a, b, d))
}
