//! On-disk layout of a computed trajectory.
//!
//! A run directory holds `trajectory.json` (parameters and per-step solver
//! data), `ledger.csv`, `slacks.csv` and a `states/` directory with one binary
//! file per field. Binary fields start with the magic `VFLD`, then
//! little-endian `u32` version, dimension, nodes per axis and role tag, a
//! `u64` value count, and the values as little-endian `f64` (node-major,
//! components fastest).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{ledger_rows, slacks_from_rows, LedgerRow, StepSlack};
use crate::error::{Error, Result};
use crate::functionals::{EnergyBreakdown, Model};
use crate::grid::{Field, Grid, Role};
use crate::material::{Material, ScaleParams};
use crate::solver::{InterpolantRecord, StepRecord, TrajectoryRecord};

const MAGIC: &[u8; 4] = b"VFLD";
const FIELD_VERSION: u32 = 1;
pub const FORMAT_VERSION: u32 = 1;

pub const TRAJECTORY_FILE: &str = "trajectory.json";
pub const LEDGER_FILE: &str = "ledger.csv";
pub const SLACKS_FILE: &str = "slacks.csv";
pub const STATES_DIR: &str = "states";

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let vals = field.values();
    let mut out = Vec::with_capacity(28 + 8 * vals.len());
    out.extend_from_slice(MAGIC);
    for v in [FIELD_VERSION, g.dim() as u32, g.nodes_per_axis() as u32, field.role().tag()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(vals.len() as u64).to_le_bytes());
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field> {
    let bad = |m: &str| Error::Format(format!("field file: {m}"));
    if bytes.len() < 28 || &bytes[..4] != MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    if word(0) != FIELD_VERSION {
        return Err(bad("unsupported version"));
    }
    let grid = Grid::new(word(1) as usize, word(2) as usize)?;
    let role = Role::from_tag(word(3)).ok_or_else(|| bad("unknown role tag"))?;
    let count = u64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes")) as usize;
    if bytes.len() != 28 + 8 * count {
        return Err(bad("length does not match the value count"));
    }
    let values = bytes[28..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Field::from_values(grid, role, values)
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    write_atomic(path, &encode_field(field))
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}

/// Everything of a trajectory except the fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryMeta {
    pub format_version: u32,
    pub model: Model,
    pub scales: ScaleParams,
    pub material: Material,
    pub steps_per_block: usize,
    pub steps: Vec<StepRecord>,
    pub interpolants: Vec<Option<InterpolantRecord>>,
}

/// One row of `ledger.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct LedgerCsvRow {
    pub step: usize,
    pub time: f64,
    pub elastic_W: f64,
    pub second_grade_P: f64,
    pub dissipation_R: f64,
    pub inertial: f64,
    pub force_work: f64,
    pub total: f64,
}

impl LedgerCsvRow {
    pub fn breakdown(&self) -> EnergyBreakdown {
        EnergyBreakdown {
            elastic_W: self.elastic_W,
            second_grade_P: self.second_grade_P,
            dissipation_R: self.dissipation_R,
            inertial: self.inertial,
            force_work: self.force_work,
            total: self.total,
        }
    }
}

/// One row of `slacks.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackCsvRow {
    pub step: usize,
    pub initial_energy: f64,
    pub delayed_kinetic: f64,
    pub kinetic: f64,
    pub interpolant_integral: Option<f64>,
    pub interpolant_alt: Option<f64>,
    pub local_slack: f64,
    pub simplified_lhs: f64,
    pub simplified_rhs: f64,
    pub simplified_slack: f64,
    pub refined_slack: Option<f64>,
    pub refined_alt_slack: Option<f64>,
    pub shadow_slack: f64,
}

fn state_path(dir: &Path, prefix: char, k: usize) -> PathBuf {
    dir.join(STATES_DIR).join(format!("{prefix}_{k:05}.bin"))
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn ledger_csv_rows(traj: &TrajectoryRecord) -> Vec<LedgerCsvRow> {
    traj.steps
        .iter()
        .map(|s| {
            let b = s.breakdown;
            LedgerCsvRow {
                step: s.step,
                time: s.time,
                elastic_W: b.elastic_W,
                second_grade_P: b.second_grade_P,
                dissipation_R: b.dissipation_R,
                inertial: b.inertial,
                force_work: b.force_work,
                total: b.total,
            }
        })
        .collect()
}

pub fn slack_csv_rows(initial_energy: f64, rows: &[LedgerRow], slacks: &[StepSlack]) -> Vec<SlackCsvRow> {
    rows.iter()
        .zip(slacks)
        .map(|(r, s)| SlackCsvRow {
            step: r.step,
            initial_energy,
            delayed_kinetic: r.delayed_kinetic,
            kinetic: r.kinetic,
            interpolant_integral: r.interpolant_integral,
            interpolant_alt: r.interpolant_alt,
            local_slack: s.local.value(),
            simplified_lhs: s.simplified.lhs,
            simplified_rhs: s.simplified.rhs,
            simplified_slack: s.simplified.value(),
            refined_slack: s.refined.map(|x| x.value()),
            refined_alt_slack: s.refined_alt.map(|x| x.value()),
            shadow_slack: s.shadow.value(),
        })
        .collect()
}

/// `ledger.csv` contents of a trajectory.
pub fn ledger_csv(traj: &TrajectoryRecord) -> Result<Vec<u8>> {
    csv_bytes(&ledger_csv_rows(traj))
}

/// Writes the full run directory; returns the written paths relative to `dir`.
pub fn save_trajectory(dir: &Path, traj: &TrajectoryRecord, with_states: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join(STATES_DIR))?;
    let mut written = Vec::new();
    let meta = TrajectoryMeta {
        format_version: FORMAT_VERSION,
        model: traj.model,
        scales: traj.scales,
        material: traj.material,
        steps_per_block: traj.steps_per_block,
        steps: traj.steps.clone(),
        interpolants: traj.interpolants.clone(),
    };
    write_atomic(&dir.join(TRAJECTORY_FILE), &serde_json::to_vec_pretty(&meta)?)?;
    written.push(PathBuf::from(TRAJECTORY_FILE));
    write_atomic(&dir.join(LEDGER_FILE), &ledger_csv(traj)?)?;
    written.push(PathBuf::from(LEDGER_FILE));
    let rows = ledger_rows(traj);
    let e0 = traj.energy(0);
    let slacks = slacks_from_rows(e0, &rows);
    write_atomic(&dir.join(SLACKS_FILE), &csv_bytes(&slack_csv_rows(e0, &rows, &slacks))?)?;
    written.push(PathBuf::from(SLACKS_FILE));
    if with_states {
        for (k, s) in traj.states.iter().enumerate() {
            write_field(&state_path(dir, 'y', k), s)?;
            written.push(PathBuf::from(STATES_DIR).join(format!("y_{k:05}.bin")));
        }
        for (k, (w, f)) in traj.w.iter().zip(&traj.f).enumerate() {
            write_field(&state_path(dir, 'w', k + 1), w)?;
            write_field(&state_path(dir, 'f', k + 1), f)?;
            written.push(PathBuf::from(STATES_DIR).join(format!("w_{:05}.bin", k + 1)));
            written.push(PathBuf::from(STATES_DIR).join(format!("f_{:05}.bin", k + 1)));
        }
    }
    Ok(written)
}

pub fn load_meta(dir: &Path) -> Result<TrajectoryMeta> {
    let meta: TrajectoryMeta = serde_json::from_slice(&fs::read(dir.join(TRAJECTORY_FILE))?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {}", meta.format_version)));
    }
    Ok(meta)
}

/// Reads a trajectory including its fields.
pub fn load_trajectory(dir: &Path) -> Result<TrajectoryRecord> {
    let meta = load_meta(dir)?;
    let k_max = meta.steps.len();
    let states = (0..=k_max)
        .map(|k| read_field(&state_path(dir, 'y', k)))
        .collect::<Result<Vec<_>>>()?;
    let w = (1..=k_max)
        .map(|k| read_field(&state_path(dir, 'w', k)))
        .collect::<Result<Vec<_>>>()?;
    let f = (1..=k_max)
        .map(|k| read_field(&state_path(dir, 'f', k)))
        .collect::<Result<Vec<_>>>()?;
    let grid = states[0].grid();
    if states.iter().chain(&w).chain(&f).any(|x| x.grid() != grid) {
        return Err(Error::Format("state files use different grids".into()));
    }
    Ok(TrajectoryRecord {
        model: meta.model,
        scales: meta.scales,
        material: meta.material,
        steps_per_block: meta.steps_per_block,
        states,
        w,
        f,
        steps: meta.steps,
        interpolants: meta.interpolants,
    })
}

pub fn load_ledger(dir: &Path) -> Result<Vec<LedgerCsvRow>> {
    read_csv(&dir.join(LEDGER_FILE))
}

pub fn load_slacks(dir: &Path) -> Result<Vec<SlackCsvRow>> {
    read_csv(&dir.join(SLACKS_FILE))
}

/// Ledger rows assembled from the CSV files alone (no fields needed).
pub fn rows_from_csv(ledger: &[LedgerCsvRow], slacks: &[SlackCsvRow]) -> Result<(f64, Vec<LedgerRow>)> {
    if ledger.len() != slacks.len() {
        return Err(Error::SizeMismatch {
            expected: ledger.len(),
            got: slacks.len(),
        });
    }
    let e0 = slacks.first().map(|s| s.initial_energy).unwrap_or(0.0);
    let rows = ledger
        .iter()
        .zip(slacks)
        .map(|(l, s)| {
            if l.step != s.step {
                return Err(Error::Format(format!("ledger step {} vs slack step {}", l.step, s.step)));
            }
            Ok(LedgerRow {
                step: l.step,
                breakdown: l.breakdown(),
                delayed_kinetic: s.delayed_kinetic,
                kinetic: s.kinetic,
                interpolant_integral: s.interpolant_integral,
                interpolant_alt: s.interpolant_alt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((e0, rows))
}
