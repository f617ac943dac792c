//! Pass/fail checks shared by `simulate` and `check`.

use viscoflow_core::diagnostics::{slack_violations, FenchelResidual};
use viscoflow_core::persist::{LedgerCsvRow, SlackCsvRow};
use viscoflow_core::{StepSlack, Tolerances};

use crate::manifest::CheckOutcome;

/// Relative agreement required between stored and recomputed records.
pub const CONSISTENCY_REL: f64 = 1e-12;

/// One check per inequality: per-step, simplified, refined and shadow.
///
/// `label` names a step in failure messages (a file row, for instance).
pub fn slack_checks(slacks: &[StepSlack], tol: &Tolerances, prefix: &str, label: &dyn Fn(usize) -> String) -> Vec<CheckOutcome> {
    let violations = slack_violations(slacks, tol);
    let has_refined = slacks.iter().any(|s| s.refined.is_some());
    let specs: [(&str, f64, bool); 4] = [
        ("local", tol.simplified, true),
        ("simplified", tol.simplified, true),
        ("refined", tol.refined, has_refined),
        ("shadow", tol.shadow, true),
    ];
    specs
        .iter()
        .filter(|(_, _, on)| *on)
        .map(|&(name, tolerance, _)| {
            let values = slacks.iter().filter_map(|s| {
                let v = match name {
                    "local" => Some(s.local),
                    "simplified" => Some(s.simplified),
                    "refined" => s.refined,
                    _ => Some(s.shadow),
                };
                v.map(|v| (s.step, v.scaled()))
            });
            let worst = values.fold(None, |acc: Option<(usize, f64)>, (k, v)| match acc {
                Some((_, w)) if w <= v => acc,
                _ => Some((k, v)),
            });
            let failures: Vec<String> = violations
                .iter()
                .filter(|v| v.check == name)
                .map(|v| format!("{}: scaled slack {:e} below -{:e}", label(v.step), v.value, v.tolerance))
                .collect();
            CheckOutcome {
                name: format!("{prefix}{name}_energy"),
                pass: failures.is_empty(),
                tolerance,
                worst: worst.map(|w| w.1),
                worst_step: worst.map(|w| w.0),
                failures,
            }
        })
        .collect()
}

/// Residuals must lie in `[-floor, tol]` after scaling by `1 + |⟨ξ, v⟩|`.
pub fn fenchel_check(residuals: &[FenchelResidual], tol: &Tolerances) -> CheckOutcome {
    let failures: Vec<String> = residuals
        .iter()
        .filter(|r| !(r.scaled() <= tol.fenchel && r.scaled() >= -tol.fenchel_floor))
        .map(|r| format!("step {}: scaled residual {:e}", r.step, r.scaled()))
        .collect();
    let worst = residuals
        .iter()
        .map(|r| (r.step, r.scaled()))
        .fold(None, |acc: Option<(usize, f64)>, (k, v)| match acc {
            Some((_, w)) if w.abs() >= v.abs() => acc,
            _ => Some((k, v)),
        });
    CheckOutcome {
        name: "fenchel_young".into(),
        pass: failures.is_empty(),
        tolerance: tol.fenchel,
        worst: worst.map(|w| w.1),
        worst_step: worst.map(|w| w.0),
        failures,
    }
}

fn ledger_fields(r: &LedgerCsvRow) -> [(&'static str, Option<f64>); 7] {
    [
        ("time", Some(r.time)),
        ("elastic_W", Some(r.elastic_W)),
        ("second_grade_P", Some(r.second_grade_P)),
        ("dissipation_R", Some(r.dissipation_R)),
        ("inertial", Some(r.inertial)),
        ("force_work", Some(r.force_work)),
        ("total", Some(r.total)),
    ]
}

fn slack_fields(r: &SlackCsvRow) -> [(&'static str, Option<f64>); 12] {
    [
        ("initial_energy", Some(r.initial_energy)),
        ("delayed_kinetic", Some(r.delayed_kinetic)),
        ("kinetic", Some(r.kinetic)),
        ("interpolant_integral", r.interpolant_integral),
        ("interpolant_alt", r.interpolant_alt),
        ("local_slack", Some(r.local_slack)),
        ("simplified_lhs", Some(r.simplified_lhs)),
        ("simplified_rhs", Some(r.simplified_rhs)),
        ("simplified_slack", Some(r.simplified_slack)),
        ("refined_slack", r.refined_slack),
        ("refined_alt_slack", r.refined_alt_slack),
        ("shadow_slack", Some(r.shadow_slack)),
    ]
}

fn compare_rows<const N: usize>(
    file: &str,
    stored: &[(usize, [(&'static str, Option<f64>); N])],
    fresh: &[(usize, [(&'static str, Option<f64>); N])],
    rel: f64,
    failures: &mut Vec<String>,
    worst: &mut f64,
) {
    if stored.len() != fresh.len() {
        failures.push(format!("{file}: {} rows stored, {} recomputed", stored.len(), fresh.len()));
    }
    for (row, ((ks, a), (kf, b))) in stored.iter().zip(fresh).enumerate() {
        if ks != kf {
            failures.push(format!("{file} row {}: step {ks}, expected {kf}", row + 1));
            continue;
        }
        for ((name, x), (_, y)) in a.iter().zip(b) {
            let dev = match (x, y) {
                (Some(x), Some(y)) => (x - y).abs() / (1.0 + y.abs()),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            };
            let dev = if dev.is_nan() { f64::INFINITY } else { dev };
            *worst = worst.max(dev);
            if dev > rel {
                failures.push(format!(
                    "{file} row {} (step {ks}) column {name}: stored {}, recomputed {}",
                    row + 1,
                    fmt_opt(*x),
                    fmt_opt(*y)
                ));
            }
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_else(|| "empty".into())
}

/// Compares stored CSV records with records recomputed from the states.
pub fn consistency_check(
    ledger: &[LedgerCsvRow],
    fresh_ledger: &[LedgerCsvRow],
    slacks: &[SlackCsvRow],
    fresh_slacks: &[SlackCsvRow],
    rel: f64,
) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    let l = |rows: &[LedgerCsvRow]| rows.iter().map(|r| (r.step, ledger_fields(r))).collect::<Vec<_>>();
    let s = |rows: &[SlackCsvRow]| rows.iter().map(|r| (r.step, slack_fields(r))).collect::<Vec<_>>();
    compare_rows("ledger.csv", &l(ledger), &l(fresh_ledger), rel, &mut failures, &mut worst);
    compare_rows("slacks.csv", &s(slacks), &s(fresh_slacks), rel, &mut failures, &mut worst);
    CheckOutcome {
        name: "records_match_states".into(),
        pass: failures.is_empty(),
        tolerance: rel,
        worst: Some(worst),
        worst_step: None,
        failures,
    }
}
