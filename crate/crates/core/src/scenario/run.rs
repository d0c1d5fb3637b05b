//! Drivers behind the command-line subcommands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{InitialGuess, Method, Scenario};
use crate::dynamics::{interaction_factor, ArraySystem};
use crate::error::{Error, Result};
use crate::optim::{
    evaluate_rule, gl_rule, penalty_loop, saa_minimize_with_rule, saa_nodes, QuadratureKind, QuadratureRule,
    RunReport, SaaConfig, StochasticObjective,
};
use crate::problem::ArrayProblem;
use crate::rng::{SeedSequence, Stream};

/// Single-body impedance match `c = B(ω_p)`, `s = ω_p²(m + A(ω_p)) − k` for
/// device 0, at the harmonic closest to the dominant peak frequency.
pub fn impedance_match(system: &ArraySystem, peak_period: f64) -> (f64, f64) {
    let wp = 2.0 * PI / peak_period;
    let q = (0..system.grid.len())
        .min_by(|&a, &b| {
            let da = (system.grid.harmonics[a].omega - wp).abs();
            let db = (system.grid.harmonics[b].omega - wp).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    let w = system.grid.harmonics[q].omega;
    let d = &system.devices[0];
    let c = system.db.damping[q][(0, 0)];
    let s = w * w * (d.mass + system.db.added_mass[q][(0, 0)]) - d.stiffness;
    (c, s)
}

fn replicate(bodies: usize, c: f64, s: f64) -> Vec<f64> {
    let mut u = vec![c; bodies];
    u.extend(std::iter::repeat_n(s, bodies));
    u
}

/// Optimization run plus the isolated-device run used for `q`.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub method: Method,
    pub report: RunReport,
    /// Present for arrays of more than one device.
    pub isolated: Option<RunReport>,
}

/// Runs the penalty loop for `scenario`.
///
/// For arrays, device 0 is first optimized alone (same climate, optimizer
/// and seed); its expected power is the reference of the interaction factor
/// and, under the isolated-optimum policy, its control is replicated as the
/// starting point.
pub fn optimize(scenario: &Scenario) -> Result<OptimizeOutcome> {
    let problem = scenario.build_problem()?;
    let n = problem.system.bodies();
    let opt = &scenario.optimizer;
    let inner = opt.inner_method();
    let tp = scenario.wave_climate()?.dominant_peak_period();
    let (c0, s0) = impedance_match(&problem.system, tp);

    let isolated = if n > 1 {
        let single = scenario.isolated_from(&problem.system)?;
        log::info!("optimizing isolated device");
        Some(penalty_loop(&single, &[c0, s0], &opt.penalty, &inner, opt.seed)?)
    } else {
        None
    };

    let u0 = match (&scenario.initial_guess, &isolated) {
        (InitialGuess::Explicit { damping, stiffness }, _) => {
            let mut u = damping.clone();
            u.extend_from_slice(stiffness);
            u
        }
        (InitialGuess::IsolatedOptimum, Some(iso)) => replicate(n, iso.u[0], iso.u[1]),
        _ => replicate(n, c0, s0),
    };

    let mut report = penalty_loop(&problem, &u0, &opt.penalty, &inner, opt.seed)?;
    let p_iso = isolated.as_ref().map_or(report.expected_power, |r| r.expected_power);
    report.isolated_power = Some(p_iso);
    report.interaction_factor = interaction_factor(&report.device_powers, p_iso).ok();
    Ok(OptimizeOutcome {
        method: opt.method,
        report,
        isolated,
    })
}

/// Per-device expectations under a fixed Gauss–Legendre rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEvaluation {
    pub device: usize,
    pub x: f64,
    pub y: f64,
    pub c: f64,
    pub s: f64,
    pub power: f64,
    pub expected_h: f64,
    pub time_above: f64,
    pub peak_exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub spec_version: u32,
    pub u: Vec<f64>,
    pub nodes: usize,
    pub tail: f64,
    pub expected_power: f64,
    pub max_expected_h: f64,
    pub tau_out: f64,
    pub feasible: bool,
    pub devices: Vec<DeviceEvaluation>,
}

/// Expected power, `E[h_ℓ]`, `E[t_at,ℓ]` and `E[Q_ℓ]` for a given control.
pub fn evaluate_controls(
    problem: &ArrayProblem,
    u: &[f64],
    nodes: usize,
    tail: f64,
    tau_out: f64,
) -> Result<EvaluationReport> {
    if u.len() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            got: u.len(),
        });
    }
    let rule = gl_rule(nodes, problem.spreadings(), tail)?;
    let base = evaluate_rule(problem, u, &rule, 0.0, false)?;
    let reports = rule
        .nodes
        .par_iter()
        .map(|d| problem.analyze(u, d).map(|r| r.1))
        .collect::<Result<Vec<_>>>()?;
    let n = problem.system.bodies();
    let mut t_at = vec![0.0; n];
    let mut peaks = vec![0.0; n];
    for (r, w) in reports.iter().zip(&rule.weights) {
        for (l, d) in r.devices.iter().enumerate() {
            t_at[l] += w * d.time_above;
            peaks[l] += w * d.peak_exceedance;
        }
    }
    let devices = problem
        .system
        .devices
        .iter()
        .enumerate()
        .map(|(l, d)| DeviceEvaluation {
            device: l,
            x: d.x,
            y: d.y,
            c: u[l],
            s: u[n + l],
            power: base.device_powers[l],
            expected_h: base.constraints[l],
            time_above: t_at[l],
            peak_exceedance: peaks[l],
        })
        .collect();
    let max_h = base.max_constraint();
    Ok(EvaluationReport {
        spec_version: super::SPEC_VERSION,
        u: u.to_vec(),
        nodes,
        tail,
        expected_power: -base.cost,
        max_expected_h: max_h,
        tau_out,
        feasible: max_h <= tau_out,
        devices,
    })
}

/// Rectangular `(c, s)` grid for a single device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c_min: f64,
    pub c_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Points per axis.
    pub resolution: usize,
    pub nodes: usize,
    pub tail: f64,
    pub tau_out: f64,
}

impl GridSpec {
    /// `c ∈ [ε, 4c*]`, `s ∈ [s* − |s*|, s* + |s*|]` around the impedance
    /// match (clipped at zero in positive-stiffness mode).
    pub fn around_match(scenario: &Scenario, problem: &ArrayProblem, resolution: usize) -> Result<Self> {
        let (c, s) = impedance_match(&problem.system, scenario.wave_climate()?.dominant_peak_period());
        let adm = problem.admissibility;
        let mut s_min = s - s.abs();
        let mut s_max = s + s.abs();
        if adm.positive_stiffness {
            s_min = s_min.max(0.0);
            s_max = s_max.max(s.abs());
        }
        Ok(Self {
            c_min: adm.epsilon,
            c_max: (4.0 * c).max(2.0 * adm.epsilon),
            s_min,
            s_max,
            resolution,
            nodes: scenario.optimizer.penalty.check_nodes,
            tail: scenario.optimizer.penalty.check_tail,
            tau_out: scenario.optimizer.penalty.tau_out,
        })
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub c: f64,
    pub s: f64,
    pub power: f64,
    pub expected_h: f64,
    /// Largest `g` over the rule nodes.
    pub max_g: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub spec: GridSpec,
    /// Row-major in `c`, then `s`.
    pub rows: Vec<GridRow>,
    pub best: Option<GridRow>,
    /// Largest power change from the best point to a grid neighbour.
    pub local_variation: Option<f64>,
}

/// Exhaustive search over a `(c, s)` grid; an empty feasible set is
/// reported through `best = None`.
pub fn grid_search(problem: &ArrayProblem, spec: &GridSpec) -> Result<GridSearch> {
    if problem.system.bodies() != 1 {
        return Err(Error::scenario("devices", "grid search needs exactly one device"));
    }
    if spec.resolution == 0 {
        return Err(Error::Domain("grid resolution must be at least 1".into()));
    }
    let adm = problem.admissibility;
    if !(spec.c_min >= adm.epsilon && spec.c_max >= spec.c_min && spec.s_max >= spec.s_min) {
        return Err(Error::Domain(format!(
            "grid ranges c [{}, {}], s [{}, {}] are empty or leave the admissible set",
            spec.c_min, spec.c_max, spec.s_min, spec.s_max
        )));
    }
    if adm.positive_stiffness && spec.s_min < 0.0 {
        return Err(Error::Domain("negative stiffness grid in positive-stiffness mode".into()));
    }
    let rule = gl_rule(spec.nodes, problem.spreadings(), spec.tail)?;
    let cs = GridSpec::axis(spec.c_min, spec.c_max, spec.resolution);
    let ss = GridSpec::axis(spec.s_min, spec.s_max, spec.resolution);
    let points: Vec<(f64, f64)> = cs.iter().flat_map(|&c| ss.iter().map(move |&s| (c, s))).collect();
    let rows = points
        .par_iter()
        .map(|&(c, s)| grid_point(problem, &rule, c, s, spec.tau_out))
        .collect::<Result<Vec<_>>>()?;

    let n = spec.resolution;
    let best_idx = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.feasible)
        .max_by(|a, b| a.1.power.total_cmp(&b.1.power))
        .map(|(i, _)| i);
    let local_variation = best_idx.map(|i| {
        let (a, b) = ((i / n) as isize, (i % n) as isize);
        let mut v: f64 = 0.0;
        for da in -1..=1 {
            for db in -1..=1 {
                let (x, y) = (a + da, b + db);
                if x >= 0 && y >= 0 && (x as usize) < n && (y as usize) < n {
                    v = v.max((rows[x as usize * n + y as usize].power - rows[i].power).abs());
                }
            }
        }
        v
    });
    Ok(GridSearch {
        spec: *spec,
        best: best_idx.map(|i| rows[i]),
        rows,
        local_variation,
    })
}

fn grid_point(problem: &ArrayProblem, rule: &QuadratureRule, c: f64, s: f64, tau_out: f64) -> Result<GridRow> {
    let u = [c, s];
    let mut power = 0.0;
    let mut expected_h = 0.0;
    let mut max_g = f64::NEG_INFINITY;
    for (d, w) in rule.nodes.iter().zip(&rule.weights) {
        let (p, r) = problem.analyze(&u, d)?;
        power -= w * p.cost;
        expected_h += w * r.devices[0].h;
        max_g = max_g.max(r.devices[0].g);
    }
    Ok(GridRow {
        c,
        s,
        power,
        expected_h,
        max_g,
        feasible: expected_h <= tau_out,
    })
}

/// Quadrature convergence study at a fixed penalty parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: QuadratureKind,
    pub sizes: Vec<usize>,
    /// Monte Carlo seeds; every `(size, seed)` pair draws its nodes from its
    /// own stream. Gauss–Legendre rules are deterministic and use only the
    /// first seed.
    pub seeds: Vec<u64>,
    /// Gauss–Legendre nodes of the reference solution.
    pub reference_nodes: usize,
    /// Tail probability of the Gauss–Legendre rules under study.
    pub tail: f64,
    /// Tail probability of the reference rule. Monte Carlo nodes are drawn
    /// from the untruncated distribution, so their reference needs a much
    /// smaller tail than `tail`.
    pub reference_tail: f64,
    pub mu: f64,
    /// Stationarity target of each solve.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting control; the replicated impedance match when absent.
    pub u0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub method: String,
    pub n: usize,
    pub seed: u64,
    pub error: f64,
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

impl StudyFit {
    pub fn least_squares(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("a line fit needs at least two points".into()));
        }
        let nf = n as f64;
        let mx = x.iter().sum::<f64>() / nf;
        let my = y.iter().sum::<f64>() / nf;
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Domain("a line fit needs distinct abscissae".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
        let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
        Ok(Self {
            slope,
            intercept,
            stderr,
            r_squared,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub reference: Vec<f64>,
    pub rows: Vec<StudyRow>,
    /// `log e` against `log N`: algebraic order is `−slope`.
    pub algebraic: StudyFit,
    /// `log e` against `N`: geometric ratio is `exp(slope)`.
    pub geometric: StudyFit,
    /// Mean error per size strictly decreases.
    pub monotone: bool,
}

fn relative_error(u: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = u.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = reference.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den
}

/// Errors `‖u_N − u_ref‖/‖u_ref‖` of SAA solutions at fixed `μ`.
pub fn convergence_study(scenario: &Scenario, cfg: &StudyConfig) -> Result<StudyReport> {
    let problem = scenario.build_problem()?;
    if cfg.sizes.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Domain("study needs at least one size and one seed".into()));
    }
    let u0 = match &cfg.u0 {
        Some(u) => u.clone(),
        None => {
            let (c, s) = impedance_match(&problem.system, scenario.wave_climate()?.dominant_peak_period());
            replicate(problem.system.bodies(), c, s)
        }
    };
    let saa = SaaConfig {
        kind: QuadratureKind::GaussLegendre,
        nodes: cfg.reference_nodes,
        tail: cfg.tail,
        armijo: scenario.optimizer.saa.armijo,
        max_iterations: cfg.max_iterations,
    };
    let reference_rule = gl_rule(cfg.reference_nodes, problem.spreadings(), cfg.reference_tail)?;
    let reference = saa_minimize_with_rule(&problem, &u0, cfg.mu, cfg.tolerance, &reference_rule, &saa, 0)?.u;

    let seeds: &[u64] = match cfg.kind {
        QuadratureKind::MonteCarlo => &cfg.seeds,
        QuadratureKind::GaussLegendre => &cfg.seeds[..1],
    };
    let method = match cfg.kind {
        QuadratureKind::MonteCarlo => Method::SaaMc,
        QuadratureKind::GaussLegendre => Method::SaaGl,
    };
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        for &seed in seeds {
            let mut rng = SeedSequence::new(seed).rng(Stream::MonteCarloNodes, n as u64);
            let rule = saa_nodes(cfg.kind, n, problem.spreadings(), cfg.tail, &mut rng)?;
            let u = saa_minimize_with_rule(&problem, &u0, cfg.mu, cfg.tolerance, &rule, &saa, 0)?.u;
            let error = relative_error(&u, &reference);
            log::info!("study {} N = {n}, seed {seed}: error {error:e}", method.name());
            rows.push(StudyRow {
                method: method.name().to_string(),
                n,
                seed,
                error,
            });
        }
    }

    let x_log: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let x_lin: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.error.max(f64::MIN_POSITIVE).ln()).collect();
    let per_size: Vec<f64> = cfg
        .sizes
        .iter()
        .map(|&n| {
            let e: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.error).collect();
            e.iter().sum::<f64>() / e.len() as f64
        })
        .collect();
    let monotone = per_size.windows(2).all(|w| w[1] < w[0]);
    let (algebraic, geometric) = if cfg.sizes.len() >= 2 {
        (StudyFit::least_squares(&x_log, &y)?, StudyFit::least_squares(&x_lin, &y)?)
    } else {
        let nan = StudyFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            stderr: f64::NAN,
            r_squared: f64::NAN,
        };
        (nan, nan)
    };
    Ok(StudyReport {
        config: cfg.clone(),
        reference,
        rows,
        algebraic,
        geometric,
        monotone,
    })
}
