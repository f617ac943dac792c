//! `simulate` and `sweep`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use viscoflow_core::diagnostics::{
    energy_slack, fenchel_residual_trajectory, linearization_error, observed_order, record_difference,
};
use viscoflow_core::experiment::sweep_specs;
use viscoflow_core::persist::{save_trajectory, write_atomic};
use viscoflow_core::{Model, PartialRun, RunSpec, SweepKind, Tolerances, TrajectoryRecord};

use crate::checks::{fenchel_check, slack_checks};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{
    code_version, write_json, CheckOutcome, FileEntry, PhaseClock, RunManifest, RunStatus, SweepManifest,
    MANIFEST_FILE, MANIFEST_VERSION, SWEEP_FILE,
};

pub const RATES_FILE: &str = "rates.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const REFERENCE_DIR: &str = "reference";

pub fn level_dir(l: usize) -> PathBuf {
    PathBuf::from(format!("level_{l:02}"))
}

/// Checks computed right after a solve.
pub fn run_checks(traj: &TrajectoryRecord, tol: &Tolerances) -> CliResult<Vec<CheckOutcome>> {
    let mut checks = slack_checks(&energy_slack(traj), tol, "", &|k| format!("step {k}"));
    checks.push(fenchel_check(&fenchel_residual_trajectory(traj)?, tol));
    Ok(checks)
}

/// A persisted run.
pub struct Finished {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// Present when the run completed.
    pub trajectory: Option<TrajectoryRecord>,
    /// The solver error of a partial run.
    pub error: Option<CliError>,
}

/// Stores a (possibly partial) run with its checks, then the manifest.
pub fn finish_run(
    dir: &Path,
    config: &RunConfig,
    result: Result<TrajectoryRecord, PartialRun>,
    mut clock: PhaseClock,
) -> CliResult<Finished> {
    fs::create_dir_all(dir).map_err(|e| CliError::failure(format!("{}: {e}", dir.display())))?;
    let (traj, status, error) = match result {
        Ok(t) => (Some(t), RunStatus::Complete, None),
        Err(PartialRun { error, partial }) => (partial.map(|b| *b), RunStatus::Partial, Some(CliError::from(error))),
    };
    let mut files = Vec::new();
    let mut checks = Vec::new();
    if let Some(t) = &traj {
        let written = clock.time("persist", || save_trajectory(dir, t, config.save_states))?;
        checks = clock.time("checks", || run_checks(t, &config.tolerances))?;
        files = written
            .iter()
            .map(|p| FileEntry::of(dir, p))
            .collect::<CliResult<Vec<_>>>()?;
    }
    let manifest = RunManifest {
        format_version: MANIFEST_VERSION,
        code_version: code_version(),
        status,
        error: error.as_ref().map(|e| e.message.clone()),
        config: config.clone(),
        tolerances: config.tolerances,
        phases: clock.into_phases(),
        checks,
        files,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(Finished {
        dir: dir.to_path_buf(),
        manifest,
        trajectory: traj.filter(|_| status == RunStatus::Complete),
        error,
    })
}

pub fn print_checks(checks: &[CheckOutcome]) {
    for c in checks {
        let worst = match (c.worst, c.worst_step) {
            (Some(w), Some(k)) => format!("worst {w:e} at step {k}"),
            (Some(w), None) => format!("worst {w:e}"),
            _ => "no data".into(),
        };
        println!(
            "  {} {:<24} {worst} (tolerance {:e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.tolerance
        );
        for f in &c.failures {
            println!("       {f}");
        }
    }
}

/// Exit status of a finished run: solver failures first, then failed checks.
fn run_status(f: Finished) -> CliResult<()> {
    if let Some(e) = f.error {
        return Err(e.context(format!("partial results kept in {}", f.dir.display())));
    }
    let failed: Vec<&CheckOutcome> = f.manifest.checks.iter().filter(|c| !c.pass).collect();
    match failed.first() {
        None => Ok(()),
        Some(c) => Err(CliError::violation(format!(
            "{} check(s) failed in {}; first: {} ({})",
            failed.len(),
            f.dir.display(),
            c.name,
            c.failures.first().map(String::as_str).unwrap_or("")
        ))),
    }
}

pub fn simulate(config_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let cfg = RunConfig::load(config_path)?;
    let dir = cfg.output_dir(out, config_path);
    let mut clock = PhaseClock::default();
    let result = clock.time("solve", || cfg.spec.run());
    let finished = finish_run(&dir, &cfg, result, clock)?;
    println!("run directory {}", dir.display());
    print_checks(&finished.manifest.checks);
    run_status(finished)
}

/// One row of `rates.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub param: f64,
    pub error: f64,
    /// Slope against the previous row; empty on the first.
    pub slope: Option<f64>,
}

/// One row of `errors.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub level: usize,
    pub param: f64,
    pub time: f64,
    pub error: f64,
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| CliError::failure(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| CliError::failure(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::failure(e.to_string()))
}

pub fn rate_rows(params: &[f64], errors: &[f64]) -> Vec<RateRow> {
    (0..params.len())
        .map(|i| RateRow {
            param: params[i],
            error: errors[i],
            slope: (i > 0).then(|| (errors[i - 1] / errors[i]).ln() / (params[i - 1] / params[i]).ln()),
        })
        .collect()
}

/// Linear comparison run of a sweep, if the sweep has one.
///
/// The diagonal reference uses half the finest step of the sweep.
fn reference_spec(kind: SweepKind, base: &RunSpec, specs: &[RunSpec]) -> Option<RunSpec> {
    match kind {
        SweepKind::Delta => Some(base.with_model(Model::Linear)),
        SweepKind::Diagonal => {
            let mut r = base.with_model(Model::Linear);
            r.scales.tau = specs.last().map_or(base.scales.tau, |s| s.scales.tau) / 2.0;
            Some(r)
        }
        SweepKind::Tau | SweepKind::H => None,
    }
}

fn error_kind(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::Delta => "H1 distance of rescaled displacements to the linear run at the final shared time",
        SweepKind::Diagonal => "largest H1 distance of displacements to the fine-step linear run over shared times",
        SweepKind::Tau | SweepKind::H => {
            "largest H1 distance between consecutive levels over shared times, indexed by the coarser level"
        }
    }
}

/// Per-level error series and the scalar entering the rate fit.
fn sweep_errors(
    kind: SweepKind,
    levels: &[TrajectoryRecord],
    reference: Option<&TrajectoryRecord>,
) -> CliResult<Vec<(usize, Vec<(f64, f64)>, f64)>> {
    let sup = |s: &[(f64, f64)]| s.iter().fold(0.0_f64, |m, &(_, e)| m.max(e));
    let out = match (kind, reference) {
        (SweepKind::Delta, Some(r)) => levels
            .iter()
            .enumerate()
            .map(|(l, t)| {
                let s = linearization_error(t, r)?;
                let last = s.last().map_or(0.0, |x| x.1);
                Ok((l, s, last))
            })
            .collect::<viscoflow_core::Result<Vec<_>>>()?,
        (SweepKind::Diagonal, Some(r)) => levels
            .iter()
            .enumerate()
            .map(|(l, t)| {
                let s = record_difference(t, r)?;
                let m = sup(&s);
                Ok((l, s, m))
            })
            .collect::<viscoflow_core::Result<Vec<_>>>()?,
        _ => levels
            .windows(2)
            .enumerate()
            .map(|(l, p)| {
                let s = record_difference(&p[0], &p[1])?;
                let m = sup(&s);
                Ok((l, s, m))
            })
            .collect::<viscoflow_core::Result<Vec<_>>>()?,
    };
    Ok(out)
}

pub fn sweep(config_path: &Path, param: Option<SweepKind>, levels: Option<usize>, out: Option<&Path>) -> CliResult<()> {
    let cfg = RunConfig::load(config_path)?;
    let defaults = cfg.sweep;
    let kind = param
        .or(defaults.map(|d| d.param))
        .ok_or_else(|| CliError::config("no sweep parameter: pass --param or set sweep.param"))?;
    let levels = levels
        .or(defaults.map(|d| d.levels))
        .ok_or_else(|| CliError::config("no level count: pass --levels or set sweep.levels"))?;
    if levels == 0 {
        return Err(CliError::config("--levels must be positive"));
    }
    let dir = cfg.output_dir(out, config_path);
    let specs = sweep_specs(kind, &cfg.spec, levels).map_err(|e| CliError::config(e.to_string()))?;
    let reference = reference_spec(kind, &cfg.spec, &specs);
    let mut jobs: Vec<(PathBuf, RunSpec)> = specs.iter().enumerate().map(|(l, s)| (level_dir(l), s.clone())).collect();
    if let Some(r) = &reference {
        jobs.push((PathBuf::from(REFERENCE_DIR), r.clone()));
    }

    let start = Instant::now();
    let results: Vec<(Result<TrajectoryRecord, PartialRun>, f64)> = jobs
        .par_iter()
        .map(|(_, s)| {
            let t = Instant::now();
            let r = s.run();
            (r, t.elapsed().as_secs_f64())
        })
        .collect();
    let solve_seconds = start.elapsed().as_secs_f64();

    let mut finished = Vec::with_capacity(jobs.len());
    for ((rel, spec), (result, secs)) in jobs.iter().zip(results) {
        let level_cfg = RunConfig {
            spec: spec.clone(),
            output_dir: Some(dir.join(rel)),
            sweep: None,
            ..cfg.clone()
        };
        let mut clock = PhaseClock::default();
        clock.record("solve", secs);
        finished.push(finish_run(&dir.join(rel), &level_cfg, result, clock)?);
    }
    if let Some(f) = finished.iter_mut().find(|f| f.error.is_some()) {
        let e = f.error.take().expect("checked");
        return Err(e.context(format!("sweep run {} (partial results kept)", f.dir.display())));
    }

    let mut clock = PhaseClock::default();
    clock.record("solve", solve_seconds);
    let trajs: Vec<TrajectoryRecord> = finished.iter_mut().map(|f| f.trajectory.take().expect("complete")).collect();
    let (level_trajs, ref_traj) = match reference {
        Some(_) => (&trajs[..levels], trajs.last()),
        None => (&trajs[..], None),
    };
    let series = clock.time("errors", || sweep_errors(kind, level_trajs, ref_traj))?;
    let level_params: Vec<f64> = specs.iter().map(|s| kind.parameter(s)).collect();
    let params: Vec<f64> = series.iter().map(|(l, _, _)| level_params[*l]).collect();
    let errors: Vec<f64> = series.iter().map(|(_, _, e)| *e).collect();
    let rate = if params.len() >= 3 {
        observed_order(&params, &errors).ok()
    } else {
        None
    };
    let error_rows: Vec<ErrorRow> = series
        .iter()
        .flat_map(|(l, s, _)| {
            let param = level_params[*l];
            s.iter().map(move |&(time, error)| ErrorRow {
                level: *l,
                param,
                time,
                error,
            })
        })
        .collect();
    write_atomic(
        &dir.join(RATES_FILE),
        &csv_bytes(&rate_rows(&params, &errors), &["param", "error", "slope"])?,
    )?;
    write_atomic(
        &dir.join(ERRORS_FILE),
        &csv_bytes(&error_rows, &["level", "param", "time", "error"])?,
    )?;
    let files = [RATES_FILE, ERRORS_FILE]
        .iter()
        .map(|p| FileEntry::of(&dir, Path::new(p)))
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = SweepManifest {
        format_version: MANIFEST_VERSION,
        code_version: code_version(),
        param: kind,
        config: cfg.clone(),
        levels: (0..levels).map(level_dir).collect(),
        level_params,
        reference: reference.map(|_| PathBuf::from(REFERENCE_DIR)),
        error_kind: error_kind(kind).into(),
        rate: rate.clone(),
        phases: clock.into_phases(),
        files,
    };
    write_json(&dir.join(SWEEP_FILE), &manifest)?;

    println!("sweep directory {} ({} over {levels} level(s))", dir.display(), kind.name());
    for f in &finished {
        println!("{}", f.dir.display());
        print_checks(&f.manifest.checks);
    }
    for r in rate_rows(&params, &errors) {
        let slope = r.slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
        println!("  {} = {:e}: error {:e}, slope {slope}", kind.name(), r.param, r.error);
    }
    if let Some(r) = &rate {
        println!("  fitted order {:.4}", r.slope);
    }
    let failed: Vec<String> = finished
        .iter()
        .flat_map(|f| {
            f.manifest
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(move |c| format!("{}: {}", f.dir.display(), c.name))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::violation(format!("failed checks: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_slopes_of_a_power_law() {
        let p = [0.4, 0.2, 0.1];
        let e: Vec<f64> = p.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        let rows = rate_rows(&p, &e);
        assert_eq!(rows[0].slope, None);
        for r in &rows[1..] {
            assert!((r.slope.unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_tables_keep_their_header() {
        let rows: Vec<RateRow> = Vec::new();
        let bytes = csv_bytes(&rows, &["param", "error", "slope"]).unwrap();
        assert_eq!(bytes, b"param,error,slope\n");
    }
}
