//! `check`: re-runs the diagnostics on stored records without solving.

use std::path::Path;

use viscoflow_core::diagnostics::{fenchel_residual_trajectory, ledger_rows, slacks_from_rows};
use viscoflow_core::persist::{
    ledger_csv_rows, load_ledger, load_slacks, load_trajectory, rows_from_csv, slack_csv_rows, LEDGER_FILE,
    SLACKS_FILE,
};

use crate::checks::{consistency_check, fenchel_check, slack_checks, CONSISTENCY_REL};
use crate::error::{CliError, CliResult};
use crate::manifest::{read_json, stale_files, CheckOutcome, RunManifest, RunStatus, SweepManifest, MANIFEST_FILE, SWEEP_FILE};
use crate::run::print_checks;

fn bad_record(file: &str, e: impl std::fmt::Display) -> CliError {
    CliError::violation(format!("{file}: {e}"))
}

/// All checks of one run directory.
pub fn check_run(dir: &Path, tol_scale: f64) -> CliResult<Vec<CheckOutcome>> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))?;
    let tol = manifest.tolerances.scaled(tol_scale);
    if manifest.status == RunStatus::Partial {
        eprintln!(
            "note: {} holds a partial run ({})",
            dir.display(),
            manifest.error.as_deref().unwrap_or("unknown error")
        );
        if manifest.files.is_empty() {
            return Ok(Vec::new());
        }
    }
    for p in stale_files(dir, &manifest.files) {
        eprintln!("note: {} changed since the run", dir.join(p).display());
    }

    let ledger = load_ledger(dir).map_err(|e| bad_record(LEDGER_FILE, e))?;
    let slack_rows = load_slacks(dir).map_err(|e| bad_record(SLACKS_FILE, e))?;
    let (e0, rows) = rows_from_csv(&ledger, &slack_rows).map_err(|e| bad_record(LEDGER_FILE, e))?;
    let row_of = |k: usize| {
        let row = ledger.iter().position(|r| r.step == k).map_or(0, |i| i + 1);
        format!("{LEDGER_FILE} row {row} (step {k})")
    };
    let mut checks = slack_checks(&slacks_from_rows(e0, &rows), &tol, "stored_", &row_of);

    if manifest.config.save_states {
        let traj = load_trajectory(dir).map_err(|e| bad_record("states", e))?;
        let fresh_rows = ledger_rows(&traj);
        let fresh_e0 = traj.energy(0);
        let fresh_slacks = slacks_from_rows(fresh_e0, &fresh_rows);
        checks.push(consistency_check(
            &ledger,
            &ledger_csv_rows(&traj),
            &slack_rows,
            &slack_csv_rows(fresh_e0, &fresh_rows, &fresh_slacks),
            CONSISTENCY_REL * tol_scale,
        ));
        checks.extend(slack_checks(&fresh_slacks, &tol, "", &|k| format!("step {k}")));
        checks.push(fenchel_check(&fenchel_residual_trajectory(&traj)?, &tol));
    } else {
        eprintln!("note: {} has no stored states; field diagnostics skipped", dir.display());
    }
    Ok(checks)
}

pub fn check(dir: &Path, tol_scale: f64) -> CliResult<()> {
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return Err(CliError::config("--tol-scale must be positive and finite"));
    }
    let runs = if dir.join(SWEEP_FILE).exists() {
        let sweep: SweepManifest = read_json(&dir.join(SWEEP_FILE))?;
        for p in stale_files(dir, &sweep.files) {
            eprintln!("note: {} changed since the sweep", dir.join(p).display());
        }
        sweep.levels.iter().chain(&sweep.reference).map(|p| dir.join(p)).collect()
    } else {
        vec![dir.to_path_buf()]
    };
    let mut failed = Vec::new();
    for run in &runs {
        let checks = check_run(run, tol_scale)?;
        println!("{}", run.display());
        print_checks(&checks);
        for c in checks.iter().filter(|c| !c.pass) {
            let first = c.failures.first().map(String::as_str).unwrap_or("");
            failed.push(format!("{} {}: {first}", run.display(), c.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::violation(format!(
            "{} check(s) failed:\n  {}",
            failed.len(),
            failed.join("\n  ")
        )))
    }
}
