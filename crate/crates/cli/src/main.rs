//! `wecopt`: optimize, evaluate and study control settings of WEC arrays.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use wec_core::optim::QuadratureKind;
use wec_core::scenario::{
    convergence_study, evaluate_controls, grid_search, optimize, parse_scenario, read_summary, write_evaluation,
    write_grid, write_run_artifacts, write_study, GridSpec, Method, Scenario, StudyConfig,
};
use wec_core::Error;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "wecopt", version, about = "Robust damping/stiffness optimization for wave-energy converter arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides `optimizer.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `optimizer.method`.
    #[arg(long, value_parser = ["sa", "saa-mc", "saa-gl"])]
    method: Option<String>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the penalty loop and write history, device map and summary.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Overrides `constraint.alpha`.
        #[arg(long)]
        alpha: Option<f64>,
        /// Overrides `constraint.positive_stiffness`.
        #[arg(long)]
        positive_stiffness: Option<bool>,
        /// Overrides `optimizer.saa.nodes`.
        #[arg(long)]
        nodes: Option<usize>,
        /// Overrides `optimizer.penalty.max_outer`.
        #[arg(long)]
        max_outer: Option<usize>,
    },
    /// Expected power and slamming statistics of a fixed control.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Control vector `c_1,…,c_N,s_1,…,s_N`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "from_summary")]
        u: Option<Vec<f64>>,
        /// Takes the control from a `summary.json`.
        #[arg(long)]
        from_summary: Option<PathBuf>,
        /// Gauss–Legendre nodes; defaults to `optimizer.penalty.check_nodes`.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Exhaustive `(c, s)` search for a single device.
    GridSearch {
        #[command(flatten)]
        common: Common,
        /// Points per axis.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long)]
        c_min: Option<f64>,
        #[arg(long)]
        c_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s_max: Option<f64>,
    },
    /// Error of SAA solutions against a fine Gauss–Legendre reference.
    ConvergenceStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128")]
        sizes: Vec<usize>,
        /// Monte Carlo seeds; defaults to `--seed` or the scenario seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value_t = 256)]
        reference_nodes: usize,
        #[arg(long, default_value_t = 1e-3)]
        tail: f64,
        #[arg(long, default_value_t = 1e-12)]
        reference_tail: f64,
        /// Fixed penalty parameter.
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(long, default_value_t = 5000)]
        max_iterations: usize,
    },
}

fn load(common: &Common) -> wec_core::Result<Scenario> {
    let mut s = parse_scenario(&common.scenario).map_err(|e| match e {
        Error::Io(io) => Error::Scenario {
            field: "scenario".into(),
            reason: format!("{}: {io}", common.scenario.display()),
        },
        e => e,
    })?;
    if let Some(seed) = common.seed {
        s.optimizer.seed = seed;
    }
    if let Some(m) = &common.method {
        s.optimizer.method = m.parse()?;
    }
    Ok(s)
}

fn prepare_out(dir: &Path) -> wec_core::Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: Cli) -> wec_core::Result<u8> {
    match cli.command {
        Command::Optimize {
            common,
            alpha,
            positive_stiffness,
            nodes,
            max_outer,
        } => {
            let mut s = load(&common)?;
            if let Some(a) = alpha {
                s.constraint.alpha = a;
            }
            if let Some(p) = positive_stiffness {
                s.constraint.positive_stiffness = p;
            }
            if let Some(n) = nodes {
                s.optimizer.saa.nodes = n;
            }
            if let Some(m) = max_outer {
                s.optimizer.penalty.max_outer = m;
            }
            s.validate()?;
            let outcome = optimize(&s)?;
            write_run_artifacts(&common.out, &outcome, &s.device_geometries()?, s.optimizer.penalty.tau_out)?;
            let r = &outcome.report;
            println!(
                "{}: expected power {:.6e} W, max E[h] {:.3e}, {}",
                outcome.method.name(),
                r.expected_power,
                r.max_expected_h(),
                if r.feasible { "feasible" } else { "infeasible" }
            );
            Ok(if r.feasible { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Evaluate {
            common,
            u,
            from_summary,
            nodes,
        } => {
            let s = load(&common)?;
            let u = match (u, from_summary) {
                (Some(u), _) => u,
                (None, Some(path)) => read_summary(&path)?.u,
                (None, None) => return Err(Error::Domain("evaluate needs --u or --from-summary".into())),
            };
            let problem = s.build_problem()?;
            let cfg = &s.optimizer.penalty;
            let report =
                evaluate_controls(&problem, &u, nodes.unwrap_or(cfg.check_nodes), cfg.check_tail, cfg.tau_out)?;
            prepare_out(&common.out)?;
            write_evaluation(&common.out.join("evaluation.json"), &report)?;
            println!(
                "expected power {:.6e} W, max E[h] {:.3e}, {}",
                report.expected_power,
                report.max_expected_h,
                if report.feasible { "feasible" } else { "infeasible" }
            );
            Ok(if report.feasible { 0 } else { EXIT_INFEASIBLE })
        }
        Command::GridSearch {
            common,
            resolution,
            c_min,
            c_max,
            s_min,
            s_max,
        } => {
            let s = load(&common)?;
            let problem = s.build_problem()?;
            let mut spec = GridSpec::around_match(&s, &problem, resolution)?;
            spec.c_min = c_min.unwrap_or(spec.c_min);
            spec.c_max = c_max.unwrap_or(spec.c_max);
            spec.s_min = s_min.unwrap_or(spec.s_min);
            spec.s_max = s_max.unwrap_or(spec.s_max);
            let search = grid_search(&problem, &spec)?;
            prepare_out(&common.out)?;
            write_grid(&common.out, &search)?;
            match &search.best {
                Some(b) => println!("best feasible point c = {}, s = {}, power {:.6e} W", b.c, b.s, b.power),
                None => println!("no feasible grid point"),
            }
            Ok(0)
        }
        Command::ConvergenceStudy {
            common,
            sizes,
            seeds,
            reference_nodes,
            tail,
            reference_tail,
            mu,
            tolerance,
            max_iterations,
        } => {
            let s = load(&common)?;
            let kind = match s.optimizer.method {
                Method::SaaMc => QuadratureKind::MonteCarlo,
                Method::SaaGl => QuadratureKind::GaussLegendre,
                Method::Sa => {
                    return Err(Error::Domain("convergence study needs --method saa-mc or saa-gl".into()));
                }
            };
            let cfg = StudyConfig {
                kind,
                sizes,
                seeds: seeds.unwrap_or_else(|| vec![s.optimizer.seed]),
                reference_nodes,
                tail,
                reference_tail,
                mu,
                tolerance,
                max_iterations,
                u0: None,
            };
            let report = convergence_study(&s, &cfg)?;
            prepare_out(&common.out)?;
            write_study(&common.out, &report)?;
            println!(
                "algebraic slope {:.4} (stderr {:.4}), geometric slope {:.4}, monotone {}",
                report.algebraic.slope, report.algebraic.stderr, report.geometric.slope, report.monotone
            );
            Ok(0)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::Singular { .. } => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_failures_and_input_errors_have_distinct_codes() {
        assert_eq!(exit_code(&Error::Singular { q: 3 }), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Numerical("nan".into())), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Toml("bad".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::Dimension { expected: 2, got: 3 }), EXIT_INPUT);
    }
}
