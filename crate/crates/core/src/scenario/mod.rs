//! Scenario files, run drivers and output artifacts.
//!
//! A scenario is a TOML document. Lengths are in metres, angles in radians,
//! masses in kilograms and stiffnesses in N/m. Unknown keys are rejected.
//!
//! ```toml
//! [climate]
//! depth = 50.0
//! bins = 20
//!
//! [[climate.components]]
//! significant_wave_height = 1.53
//! peak_period = 5.83
//! dominant_direction = 0.0
//! spreading = 5.0
//!
//! [[devices]]
//! x = 0.0
//! y = 0.0
//! radius = 2.5
//! draft = 0.5
//! generator_mass = 2560.0
//! generator_stiffness = 4000.0
//!
//! [constraint]
//! alpha = 1.0
//!
//! [optimizer]
//! method = "saa-gl"
//! seed = 1
//! ```

mod output;
mod run;

pub use output::{
    device_map_rows, read_summary, write_device_map, write_evaluation, write_grid, write_history, write_run_artifacts,
    write_study, write_summary, write_timings, DeviceMapRow, HistoryRow, Summary, SPEC_VERSION,
};
pub use run::{
    convergence_study, evaluate_controls, grid_search, impedance_match, optimize, DeviceEvaluation,
    EvaluationReport, GridRow, GridSearch, GridSpec, OptimizeOutcome, StudyConfig, StudyFit, StudyReport, StudyRow,
};

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::climate::{
    ClimateComponent, SpectralGrid, SpectrumParams, SpreadingParams, WaveClimate, DEFAULT_GRAVITY,
    DEFAULT_WATER_DENSITY,
};
use crate::dynamics::{Admissibility, ArraySystem};
use crate::error::{Error, Result};
use crate::hydro::{load_hydro_db, synthetic_hydro, DeviceGeometry, SurrogateParams};
use crate::optim::{ArmijoParams, InnerMethod, PenaltyConfig, QuadratureKind, SaConfig, SaaConfig};
use crate::problem::ArrayProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub climate: ClimateSection,
    pub devices: Vec<DeviceSection>,
    #[serde(default)]
    pub hydro: HydroSection,
    pub constraint: ConstraintSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub initial_guess: InitialGuess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClimateSection {
    pub depth: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_density")]
    pub water_density: f64,
    /// Equal-power frequency bins per component.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Fraction of the spectral variance covered by the bins.
    #[serde(default = "default_coverage")]
    pub coverage: f64,
    pub components: Vec<ComponentSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSection {
    pub significant_wave_height: f64,
    pub peak_period: f64,
    pub dominant_direction: f64,
    /// Donelan shape parameter `β`.
    pub spreading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub draft: f64,
    pub generator_mass: f64,
    #[serde(default)]
    pub generator_stiffness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HydroSource {
    #[default]
    Surrogate,
    /// Coefficient CSV files named by `radiation` and `excitation`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroSection {
    #[serde(default)]
    pub source: HydroSource,
    /// Relative paths resolve against the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radiation: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation: Option<PathBuf>,
    /// Adds `generator_stiffness` to the hydrostatic stiffness.
    #[serde(default = "default_true")]
    pub include_generator_stiffness: bool,
}

impl Default for HydroSection {
    fn default() -> Self {
        Self {
            source: HydroSource::default(),
            radiation: None,
            excitation: None,
            include_generator_stiffness: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    /// Slamming threshold `α`.
    pub alpha: f64,
    #[serde(default)]
    pub positive_stiffness: bool,
    /// Damping floor `ε` (N·s/m).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sa,
    SaaMc,
    SaaGl,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sa => "sa",
            Method::SaaMc => "saa-mc",
            Method::SaaGl => "saa-gl",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Method::Sa),
            "saa-mc" => Ok(Method::SaaMc),
            "saa-gl" => Ok(Method::SaaGl),
            _ => Err(Error::scenario("optimizer.method", format!("unknown method `{s}` (expected sa, saa-mc or saa-gl)"))),
        }
    }
}

/// SAA settings; the quadrature kind follows from the method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaaSection {
    pub nodes: usize,
    pub tail: f64,
    pub armijo: ArmijoParams,
    pub max_iterations: usize,
}

impl Default for SaaSection {
    fn default() -> Self {
        let d = SaaConfig::default();
        Self {
            nodes: d.nodes,
            tail: d.tail,
            armijo: d.armijo,
            max_iterations: d.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub method: Method,
    pub seed: u64,
    pub penalty: PenaltyConfig,
    pub sa: SaConfig,
    pub saa: SaaSection,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            method: Method::SaaGl,
            seed: 0,
            penalty: PenaltyConfig::default(),
            sa: SaConfig::default(),
            saa: SaaSection::default(),
        }
    }
}

impl OptimizerSection {
    pub fn inner_method(&self) -> InnerMethod {
        let saa = |kind| {
            InnerMethod::Saa(SaaConfig {
                kind,
                nodes: self.saa.nodes,
                tail: self.saa.tail,
                armijo: self.saa.armijo,
                max_iterations: self.saa.max_iterations,
            })
        };
        match self.method {
            Method::Sa => InnerMethod::Sa(self.sa),
            Method::SaaMc => saa(QuadratureKind::MonteCarlo),
            Method::SaaGl => saa(QuadratureKind::GaussLegendre),
        }
    }
}

/// Starting control of the optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialGuess {
    /// Every device gets the optimum of an isolated device.
    #[default]
    IsolatedOptimum,
    /// Every device gets the single-body impedance match at the peak frequency.
    ImpedanceMatch,
    Explicit { damping: Vec<f64>, stiffness: Vec<f64> },
}

fn default_true() -> bool {
    true
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}
fn default_density() -> f64 {
    DEFAULT_WATER_DENSITY
}
fn default_bins() -> usize {
    20
}
fn default_coverage() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1.0
}

fn positive(field: impl Into<String>, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::scenario(field, format!("must be positive and finite (got {v})")))
    }
}

fn finite(field: impl Into<String>, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::scenario(field, format!("must be finite (got {v})")))
    }
}

/// Reads, parses and validates a scenario; file paths inside it are
/// resolved against the scenario's directory.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let mut s = Scenario::from_toml_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [&mut s.hydro.radiation, &mut s.hydro.excitation].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(s)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.climate;
        positive("climate.depth", c.depth)?;
        positive("climate.gravity", c.gravity)?;
        positive("climate.water_density", c.water_density)?;
        if c.bins == 0 {
            return Err(Error::scenario("climate.bins", "must be at least 1"));
        }
        if !(c.coverage > 0.0 && c.coverage < 1.0) {
            return Err(Error::scenario("climate.coverage", format!("must lie in (0, 1) (got {})", c.coverage)));
        }
        if c.components.is_empty() {
            return Err(Error::scenario("climate.components", "at least one component is required"));
        }
        for (i, k) in c.components.iter().enumerate() {
            let f = |name: &str| format!("climate.components[{i}].{name}");
            positive(f("significant_wave_height"), k.significant_wave_height)?;
            positive(f("peak_period"), k.peak_period)?;
            finite(f("dominant_direction"), k.dominant_direction)?;
            positive(f("spreading"), k.spreading)?;
        }

        if self.devices.is_empty() {
            return Err(Error::scenario("devices", "at least one device is required"));
        }
        for (i, d) in self.devices.iter().enumerate() {
            let f = |name: &str| format!("devices[{i}].{name}");
            finite(f("x"), d.x)?;
            finite(f("y"), d.y)?;
            positive(f("radius"), d.radius)?;
            positive(f("draft"), d.draft)?;
            if !(d.generator_mass >= 0.0 && d.generator_mass.is_finite()) {
                return Err(Error::scenario(f("generator_mass"), "must be non-negative and finite"));
            }
            finite(f("generator_stiffness"), d.generator_stiffness)?;
        }
        for (i, a) in self.devices.iter().enumerate() {
            for (j, b) in self.devices.iter().enumerate().skip(i + 1) {
                let dist = (a.x - b.x).hypot(a.y - b.y);
                if dist <= a.radius + b.radius {
                    return Err(Error::scenario(
                        format!("devices[{j}]"),
                        format!("overlaps devices[{i}] (center distance {dist} m)"),
                    ));
                }
            }
        }

        positive("constraint.alpha", self.constraint.alpha)?;
        positive("constraint.epsilon", self.constraint.epsilon)?;

        let o = &self.optimizer;
        o.penalty.validate()?;
        if o.sa.window == 0 {
            return Err(Error::scenario("optimizer.sa.window", "must be at least 1"));
        }
        if let Some(t) = o.sa.initial_step {
            positive("optimizer.sa.initial_step", t)?;
        }
        positive("optimizer.sa.step_floor", o.sa.step_floor)?;
        positive("optimizer.sa.max_relative_step", o.sa.max_relative_step)?;
        if o.saa.nodes == 0 {
            return Err(Error::scenario("optimizer.saa.nodes", "must be at least 1"));
        }
        if !(o.saa.tail > 0.0 && o.saa.tail < 0.5) {
            return Err(Error::scenario("optimizer.saa.tail", "must lie in (0, 1/2)"));
        }
        for (name, a) in [("sa", &o.sa.armijo), ("saa", &o.saa.armijo)] {
            if !(a.c1 > 0.0 && a.c1 < 1.0) {
                return Err(Error::scenario(format!("optimizer.{name}.armijo.c1"), "must lie in (0, 1)"));
            }
            if !(a.factor > 0.0 && a.factor < 1.0) {
                return Err(Error::scenario(format!("optimizer.{name}.armijo.factor"), "must lie in (0, 1)"));
            }
        }

        if self.hydro.source == HydroSource::File {
            if self.hydro.radiation.is_none() {
                return Err(Error::scenario("hydro.radiation", "required when source = \"file\""));
            }
            if self.hydro.excitation.is_none() {
                return Err(Error::scenario("hydro.excitation", "required when source = \"file\""));
            }
        }

        if let InitialGuess::Explicit { damping, stiffness } = &self.initial_guess {
            let n = self.devices.len();
            if damping.len() != n {
                return Err(Error::scenario("initial_guess.damping", format!("expected {n} values, got {}", damping.len())));
            }
            if stiffness.len() != n {
                return Err(Error::scenario(
                    "initial_guess.stiffness",
                    format!("expected {n} values, got {}", stiffness.len()),
                ));
            }
            if damping.iter().chain(stiffness).any(|v| !v.is_finite()) {
                return Err(Error::scenario("initial_guess", "values must be finite"));
            }
        }
        Ok(())
    }

    pub fn wave_climate(&self) -> Result<WaveClimate> {
        let c = &self.climate;
        let components = c
            .components
            .iter()
            .map(|k| {
                Ok(ClimateComponent {
                    spectrum: SpectrumParams::from_peak_period(k.significant_wave_height, k.peak_period)?,
                    spreading: SpreadingParams::new(k.dominant_direction, k.spreading)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let climate = WaveClimate {
            components,
            water_depth: c.depth,
            gravity: c.gravity,
            water_density: c.water_density,
        };
        climate.validate()?;
        Ok(climate)
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::build(&self.wave_climate()?, self.climate.bins, self.climate.coverage)
    }

    pub fn device_geometries(&self) -> Result<Vec<DeviceGeometry>> {
        self.devices
            .iter()
            .map(|d| {
                DeviceGeometry::cylinder(
                    (d.x, d.y),
                    d.radius,
                    d.draft,
                    d.generator_mass,
                    d.generator_stiffness,
                    self.hydro.include_generator_stiffness,
                    self.climate.water_density,
                    self.climate.gravity,
                )
            })
            .collect()
    }

    pub fn admissibility(&self) -> Result<Admissibility> {
        Admissibility::new(self.constraint.epsilon, self.constraint.positive_stiffness)
    }

    pub fn build_system(&self) -> Result<ArraySystem> {
        let grid = self.spectral_grid()?;
        let devices = self.device_geometries()?;
        let db = match (&self.hydro.source, &self.hydro.radiation, &self.hydro.excitation) {
            (HydroSource::File, Some(rad), Some(exc)) => load_hydro_db(rad, exc, &grid)?,
            (HydroSource::File, _, _) => {
                return Err(Error::scenario("hydro", "coefficient file paths are missing"));
            }
            (HydroSource::Surrogate, _, _) => synthetic_hydro(
                &devices,
                &grid,
                &SurrogateParams::for_cylinders(&devices, self.climate.water_density, self.climate.gravity),
            )?,
        };
        ArraySystem::new(devices, grid, db)
    }

    pub fn build_problem(&self) -> Result<ArrayProblem> {
        self.problem_for(self.build_system()?)
    }

    /// Device 0 alone at the origin, with its diagonal coefficient block.
    pub fn build_isolated_problem(&self) -> Result<ArrayProblem> {
        let system = self.build_system()?;
        self.isolated_from(&system)
    }

    pub(crate) fn isolated_from(&self, system: &ArraySystem) -> Result<ArrayProblem> {
        let single = ArraySystem::new(vec![system.devices[0].isolated()], system.grid.clone(), system.db.restrict(0)?)?;
        self.problem_for(single)
    }

    fn problem_for(&self, system: ArraySystem) -> Result<ArrayProblem> {
        ArrayProblem::new(
            system,
            self.constraint.alpha,
            self.admissibility()?,
            self.wave_climate()?.spreadings(),
        )
    }
}
