//! Run artifacts. Floats are written in shortest round-trip form, so
//! identical runs produce identical bytes.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::run::{EvaluationReport, GridSearch, OptimizeOutcome, StudyReport};
use crate::error::Result;
use crate::hydro::DeviceGeometry;
use crate::optim::{OuterRecord, TraceEntry};

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub outer: usize,
    pub inner: usize,
    pub cost: f64,
    pub penalty: f64,
    pub mu: f64,
    pub indicator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceMapRow {
    pub device: usize,
    pub x: f64,
    pub y: f64,
    pub c: f64,
    pub s: f64,
    pub power: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub spec_version: u32,
    pub method: String,
    pub seed: u64,
    pub u: Vec<f64>,
    pub damping: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub expected_power: f64,
    pub device_powers: Vec<f64>,
    pub isolated_power: Option<f64>,
    pub interaction_factor: Option<f64>,
    pub feasible: bool,
    pub max_expected_h: f64,
    pub expected_h: Vec<f64>,
    pub tau_out: f64,
    pub initial_u: Vec<f64>,
    pub initial_power: f64,
    pub initial_max_h: f64,
    pub mu0: f64,
    pub final_mu: f64,
    pub outer: Vec<OuterRecord>,
    pub isolated_u: Option<Vec<f64>>,
}

impl Summary {
    pub fn new(outcome: &OptimizeOutcome, tau_out: f64) -> Self {
        let r = &outcome.report;
        Self {
            spec_version: SPEC_VERSION,
            method: outcome.method.name().to_string(),
            seed: r.seed,
            u: r.u.clone(),
            damping: r.controls.damping.clone(),
            stiffness: r.controls.stiffness.clone(),
            expected_power: r.expected_power,
            device_powers: r.device_powers.clone(),
            isolated_power: r.isolated_power,
            interaction_factor: r.interaction_factor,
            feasible: r.feasible,
            max_expected_h: r.max_expected_h(),
            expected_h: r.expected_h.clone(),
            tau_out,
            initial_u: r.initial_u.clone(),
            initial_power: r.initial_power,
            initial_max_h: r.initial_max_h,
            mu0: r.mu0,
            final_mu: r.final_mu,
            outer: r.outer.clone(),
            isolated_u: outcome.isolated.as_ref().map(|i| i.u.clone()),
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `history.csv`: one row per inner iteration.
pub fn write_history(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    write_csv(
        path,
        trace.iter().map(|e| HistoryRow {
            outer: e.outer,
            inner: e.inner,
            cost: e.cost,
            penalty: e.penalty,
            mu: e.mu,
            indicator: e.indicator,
        }),
    )
}

pub fn device_map_rows(devices: &[DeviceGeometry], u: &[f64], powers: &[f64]) -> Vec<DeviceMapRow> {
    let n = devices.len();
    devices
        .iter()
        .enumerate()
        .map(|(l, d)| DeviceMapRow {
            device: l,
            x: d.x,
            y: d.y,
            c: u[l],
            s: u[n + l],
            power: powers[l],
        })
        .collect()
}

/// `device_map.csv`.
pub fn write_device_map(path: &Path, devices: &[DeviceGeometry], u: &[f64], powers: &[f64]) -> Result<()> {
    write_csv(path, device_map_rows(devices, u, powers))
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    write_json(path, summary)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Wall times, kept apart from the deterministic artifacts.
pub fn write_timings(path: &Path, outcome: &OptimizeOutcome) -> Result<()> {
    let value = serde_json::json!({
        "wall_time": outcome.report.wall_time,
        "isolated_wall_time": outcome.isolated.as_ref().map(|r| r.wall_time),
    });
    write_json(path, &value)
}

pub fn write_evaluation(path: &Path, report: &EvaluationReport) -> Result<()> {
    write_json(path, report)
}

/// `grid.csv` plus `grid_best.json`.
pub fn write_grid(dir: &Path, search: &GridSearch) -> Result<()> {
    write_csv(&dir.join("grid.csv"), &search.rows)?;
    let best = serde_json::json!({
        "spec_version": SPEC_VERSION,
        "spec": search.spec,
        "best": search.best,
        "local_variation": search.local_variation,
        "feasible_points": search.rows.iter().filter(|r| r.feasible).count(),
    });
    write_json(&dir.join("grid_best.json"), &best)
}

/// `study.csv` plus `study.json` with the fitted rates.
pub fn write_study(dir: &Path, report: &StudyReport) -> Result<()> {
    write_csv(&dir.join("study.csv"), &report.rows)?;
    let fits = serde_json::json!({
        "spec_version": SPEC_VERSION,
        "config": report.config,
        "reference": report.reference,
        "algebraic": report.algebraic,
        "geometric": report.geometric,
        "monotone": report.monotone,
    });
    write_json(&dir.join("study.json"), &fits)
}

/// Writes `history.csv`, `device_map.csv`, `summary.json` and `timings.json`.
pub fn write_run_artifacts(dir: &Path, outcome: &OptimizeOutcome, devices: &[DeviceGeometry], tau_out: f64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let r = &outcome.report;
    write_history(&dir.join("history.csv"), &r.history)?;
    write_device_map(&dir.join("device_map.csv"), devices, &r.u, &r.device_powers)?;
    write_summary(&dir.join("summary.json"), &Summary::new(outcome, tau_out))?;
    write_timings(&dir.join("timings.json"), outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let devs = [DeviceGeometry {
            x: 0.1 + 0.2,
            y: -1e-300,
            radius: 1.0,
            draft: 1.0,
            mass: 1.0,
            stiffness: 1.0,
        }];
        let u = [1.0 / 3.0, -2.5e17];
        write_device_map(&path, &devs, &u, &[std::f64::consts::PI]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<DeviceMapRow> = rd.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(rows[0].x, 0.1 + 0.2);
        assert_eq!(rows[0].y, -1e-300);
        assert_eq!(rows[0].c, 1.0 / 3.0);
        assert_eq!(rows[0].s, -2.5e17);
        assert_eq!(rows[0].power, std::f64::consts::PI);
        assert_eq!(text.lines().next().unwrap(), "device,x,y,c,s,power");
    }
}
