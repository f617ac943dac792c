//! `plot-data`: raw tables on standard output.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use viscoflow_core::diagnostics::{fenchel_residual_trajectory, slacks_from_rows};
use viscoflow_core::persist::{load_ledger, load_slacks, load_trajectory, rows_from_csv};

use crate::error::{CliError, CliResult};
use crate::manifest::{read_json, RunManifest, MANIFEST_FILE, SWEEP_FILE};
use crate::run::{ErrorRow, RateRow, ERRORS_FILE, RATES_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    Energy,
    Rates,
    Errors,
}

/// Column schemas, shown by `plot-data --help`.
pub const SCHEMA_HELP: &str = "\
Writes CSV with a header row to standard output. Numbers use the shortest
decimal form that reads back to the same value. Empty cells mean \"not computed\".

energy (run directory), one row per step:
  step,time,elastic_W,second_grade_P,dissipation_R,inertial,force_work,total,
  simplified_slack,refined_slack,shadow_slack

errors (run directory), one row per step; slacks are scaled by 1+|rhs|:
  step,time,local_slack,simplified_slack,refined_slack,shadow_slack,
  fenchel_residual,fenchel_scaled

errors (sweep directory), one row per level and shared time:
  level,param,time,error

rates (sweep directory), one row per rate level:
  param,error,slope    (slope against the previous row, empty on the first)";

#[derive(Serialize)]
#[allow(non_snake_case)]
struct EnergyRow {
    step: usize,
    time: f64,
    elastic_W: f64,
    second_grade_P: f64,
    dissipation_R: f64,
    inertial: f64,
    force_work: f64,
    total: f64,
    simplified_slack: f64,
    refined_slack: Option<f64>,
    shadow_slack: f64,
}

#[derive(Serialize)]
struct StepErrorRow {
    step: usize,
    time: f64,
    local_slack: f64,
    simplified_slack: f64,
    refined_slack: Option<f64>,
    shadow_slack: f64,
    fenchel_residual: Option<f64>,
    fenchel_scaled: Option<f64>,
}

fn emit<T: Serialize>(rows: &[T], header: &[&str], out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| CliError::failure(e.to_string());
    if rows.is_empty() {
        w.write_record(header).map_err(fail)?;
    }
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn energy(dir: &Path, out: &mut dyn Write) -> CliResult<()> {
    let ledger = load_ledger(dir)?;
    let (e0, rows) = rows_from_csv(&ledger, &load_slacks(dir)?)?;
    let slacks = slacks_from_rows(e0, &rows);
    let table: Vec<EnergyRow> = ledger
        .iter()
        .zip(&slacks)
        .map(|(l, s)| EnergyRow {
            step: l.step,
            time: l.time,
            elastic_W: l.elastic_W,
            second_grade_P: l.second_grade_P,
            dissipation_R: l.dissipation_R,
            inertial: l.inertial,
            force_work: l.force_work,
            total: l.total,
            simplified_slack: s.simplified.value(),
            refined_slack: s.refined.map(|r| r.value()),
            shadow_slack: s.shadow.value(),
        })
        .collect();
    emit(
        &table,
        &[
            "step", "time", "elastic_W", "second_grade_P", "dissipation_R", "inertial", "force_work", "total",
            "simplified_slack", "refined_slack", "shadow_slack",
        ],
        out,
    )
}

fn run_errors(dir: &Path, manifest: &RunManifest, out: &mut dyn Write) -> CliResult<()> {
    let ledger = load_ledger(dir)?;
    let (e0, rows) = rows_from_csv(&ledger, &load_slacks(dir)?)?;
    let slacks = slacks_from_rows(e0, &rows);
    let fenchel = if manifest.config.save_states {
        fenchel_residual_trajectory(&load_trajectory(dir)?)?
    } else {
        Vec::new()
    };
    let table: Vec<StepErrorRow> = ledger
        .iter()
        .zip(&slacks)
        .map(|(l, s)| {
            let f = fenchel.iter().find(|r| r.step == l.step);
            StepErrorRow {
                step: l.step,
                time: l.time,
                local_slack: s.local.scaled(),
                simplified_slack: s.simplified.scaled(),
                refined_slack: s.refined.map(|r| r.scaled()),
                shadow_slack: s.shadow.scaled(),
                fenchel_residual: f.map(|r| r.residual),
                fenchel_scaled: f.map(|r| r.scaled()),
            }
        })
        .collect();
    emit(
        &table,
        &[
            "step", "time", "local_slack", "simplified_slack", "refined_slack", "shadow_slack", "fenchel_residual",
            "fenchel_scaled",
        ],
        out,
    )
}

pub fn plot_data(dir: &Path, what: What, out: &mut dyn Write) -> CliResult<()> {
    let sweep = dir.join(SWEEP_FILE).exists();
    if !sweep && !dir.join(MANIFEST_FILE).exists() {
        return Err(CliError::config(format!("{} is neither a run nor a sweep directory", dir.display())));
    }
    match (what, sweep) {
        (What::Energy, false) => energy(dir, out),
        (What::Energy, true) => Err(CliError::config(
            "energy needs a run directory; pass one of the level directories of the sweep",
        )),
        (What::Errors, false) => {
            let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))?;
            run_errors(dir, &manifest, out)
        }
        (What::Errors, true) => {
            let rows: Vec<ErrorRow> = read_rows(&dir.join(ERRORS_FILE))?;
            emit(&rows, &["level", "param", "time", "error"], out)
        }
        (What::Rates, true) => {
            let rows: Vec<RateRow> = read_rows(&dir.join(RATES_FILE))?;
            emit(&rows, &["param", "error", "slope"], out)
        }
        (What::Rates, false) => Err(CliError::config("rates need a sweep directory")),
    }
}
