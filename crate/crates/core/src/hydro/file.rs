//! Coefficient files.
//!
//! Radiation file, one row per `(ω, ℓ, m)`:
//!
//! ```text
//! omega,row,col,A,B
//! ```
//!
//! Excitation file, one row per `(ω, ℓ)` (plane-wave mode) or per
//! `(ω, ℓ, θ)` when a `theta` column is present (tabulated mode):
//!
//! ```text
//! omega,device,f_mag,f_phase[,theta]
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use super::{clip_psd, eigen_extent, relative_asymmetry, unwrap_phase, ExcitationModel, HydroDB};
use crate::climate::SpectralGrid;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct RadiationRow {
    omega: f64,
    row: usize,
    col: usize,
    #[serde(rename = "A")]
    added_mass: f64,
    #[serde(rename = "B")]
    damping: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExcitationRow {
    omega: f64,
    device: usize,
    f_mag: f64,
    f_phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

/// Maps each grid harmonic to the index of the matching file frequency.
fn match_frequencies(file_omegas: &[f64], grid: &SpectralGrid) -> Result<Vec<usize>> {
    grid.harmonics
        .iter()
        .enumerate()
        .map(|(q, h)| {
            file_omegas
                .iter()
                .position(|&w| (w - h.omega).abs() <= 1e-9 * h.omega)
                .ok_or_else(|| {
                    Error::Schema(format!("no coefficients for grid frequency {q} (omega = {} rad/s)", h.omega))
                })
        })
        .collect()
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Reads radiation and excitation coefficients and aligns them with `grid`.
///
/// Matrices with relative asymmetry below 1e-6 are symmetrized by averaging;
/// larger asymmetry is a data error. Radiation damping with an eigenvalue
/// below `−1e-6‖B‖` is rejected; smaller negative eigenvalues are clipped.
pub fn load_hydro_db(radiation: &Path, excitation: &Path, grid: &SpectralGrid) -> Result<HydroDB> {
    let rad_rows: Vec<RadiationRow> = csv::Reader::from_path(radiation)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    let exc_rows: Vec<ExcitationRow> = csv::Reader::from_path(excitation)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    if rad_rows.is_empty() {
        return Err(Error::Schema("radiation file has no rows".into()));
    }

    let bodies = rad_rows.iter().map(|r| r.row.max(r.col)).max().unwrap_or(0) + 1;
    let omegas = distinct(rad_rows.iter().map(|r| r.omega));
    let index = match_frequencies(&omegas, grid)?;

    let mut a_by: Vec<DMatrix<f64>> = vec![DMatrix::from_element(bodies, bodies, f64::NAN); omegas.len()];
    let mut b_by = a_by.clone();
    for r in &rad_rows {
        let w = omegas.iter().position(|&o| o == r.omega).expect("omega drawn from rows");
        a_by[w][(r.row, r.col)] = r.added_mass;
        b_by[w][(r.row, r.col)] = r.damping;
    }

    let mut added_mass = Vec::with_capacity(grid.len());
    let mut damping = Vec::with_capacity(grid.len());
    for (q, &w) in index.iter().enumerate() {
        let (a, b) = (&a_by[w], &b_by[w]);
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("incomplete or non-finite matrices at omega = {}", omegas[w])));
        }
        for (name, m) in [("added mass", a), ("radiation damping", b)] {
            if relative_asymmetry(m) >= 1e-6 {
                return Err(Error::Data(format!("{name} at frequency {q} is not symmetric")));
            }
        }
        let a = 0.5 * (a + a.transpose());
        let mut b = 0.5 * (b + b.transpose());
        let (min, norm) = eigen_extent(&b);
        if min < -1e-6 * norm {
            return Err(Error::Data(format!(
                "radiation damping at frequency {q} has eigenvalue {min} (norm {norm}); not physical"
            )));
        }
        if min < 0.0 {
            b = clip_psd(&b);
        }
        added_mass.push(a);
        damping.push(b);
    }

    let tabulated = exc_rows.iter().any(|r| r.theta.is_some());
    if tabulated && exc_rows.iter().any(|r| r.theta.is_none()) {
        return Err(Error::Schema("theta column must be filled on every excitation row".into()));
    }
    let exc_omegas = distinct(exc_rows.iter().map(|r| r.omega));
    let exc_index = match_frequencies(&exc_omegas, grid)?;
    if exc_rows.iter().any(|r| r.device >= bodies) {
        return Err(Error::Schema("excitation row refers to an unknown device".into()));
    }

    let excitation = if tabulated {
        let thetas = distinct(exc_rows.iter().filter_map(|r| r.theta));
        let mut table: BTreeMap<(usize, usize, usize), (f64, f64)> = BTreeMap::new();
        for r in &exc_rows {
            let w = exc_omegas.iter().position(|&o| o == r.omega).expect("omega drawn from rows");
            let t = thetas.iter().position(|&t| Some(t) == r.theta).expect("theta drawn from rows");
            table.insert((w, r.device, t), (r.f_mag, r.f_phase));
        }
        let mut magnitude = Vec::with_capacity(grid.len());
        let mut phase = Vec::with_capacity(grid.len());
        for &w in &exc_index {
            let mut mq = Vec::with_capacity(bodies);
            let mut pq = Vec::with_capacity(bodies);
            for l in 0..bodies {
                let mut m = Vec::with_capacity(thetas.len());
                let mut p = Vec::with_capacity(thetas.len());
                for t in 0..thetas.len() {
                    let &(mag, ph) = table.get(&(w, l, t)).ok_or_else(|| {
                        Error::Schema(format!(
                            "missing tabulated excitation for omega {}, device {l}, theta {}",
                            exc_omegas[w], thetas[t]
                        ))
                    })?;
                    m.push(mag);
                    p.push(ph);
                }
                mq.push(m);
                pq.push(unwrap_phase(&p));
            }
            magnitude.push(mq);
            phase.push(pq);
        }
        ExcitationModel::Tabulated {
            thetas,
            magnitude,
            phase,
        }
    } else {
        let mut table: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for r in &exc_rows {
            let w = exc_omegas.iter().position(|&o| o == r.omega).expect("omega drawn from rows");
            table.insert((w, r.device), Complex64::from_polar(r.f_mag, r.f_phase));
        }
        let reference = exc_index
            .iter()
            .map(|&w| {
                (0..bodies)
                    .map(|l| {
                        table.get(&(w, l)).copied().ok_or_else(|| {
                            Error::Schema(format!("missing excitation for omega {}, device {l}", exc_omegas[w]))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ExcitationModel::PlaneWave { reference }
    };

    let db = HydroDB {
        omegas: grid.omegas(),
        added_mass,
        damping,
        excitation,
    };
    db.validate()?;
    Ok(db)
}

/// Writes `db` in the layout read by [`load_hydro_db`].
pub fn write_hydro_db(db: &HydroDB, radiation: &Path, excitation: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(radiation)?;
    for (q, &omega) in db.omegas.iter().enumerate() {
        let n = db.added_mass[q].nrows();
        for row in 0..n {
            for col in 0..n {
                w.serialize(RadiationRow {
                    omega,
                    row,
                    col,
                    added_mass: db.added_mass[q][(row, col)],
                    damping: db.damping[q][(row, col)],
                })?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(excitation)?;
    match &db.excitation {
        ExcitationModel::PlaneWave { reference } => {
            for (q, &omega) in db.omegas.iter().enumerate() {
                for (device, f) in reference[q].iter().enumerate() {
                    w.serialize(ExcitationRow {
                        omega,
                        device,
                        f_mag: f.norm(),
                        f_phase: f.arg(),
                        theta: None,
                    })?;
                }
            }
        }
        ExcitationModel::Tabulated {
            thetas,
            magnitude,
            phase,
        } => {
            for (q, &omega) in db.omegas.iter().enumerate() {
                for device in 0..magnitude[q].len() {
                    for (t, &theta) in thetas.iter().enumerate() {
                        w.serialize(ExcitationRow {
                            omega,
                            device,
                            f_mag: magnitude[q][device][t],
                            f_phase: phase[q][device][t],
                            theta: Some(theta),
                        })?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
