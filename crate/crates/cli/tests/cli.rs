//! End-to-end tests of the `viscoflow` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_viscoflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn viscoflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// A small nonlinear run with a bump, a velocity and a time-varying force.
fn small_config() -> Value {
    json!({
        "spec": {
            "dim": 2,
            "n": 9,
            "material": {
                "elastic": { "mu": 1.0, "kappa": 1.0, "eps_det": 0.1, "s_exp": 4.0, "c_p": 1.0, "p_exp": 4.0 },
                "viscosity": { "eta": 1.0, "lambda_v": 0.5 }
            },
            "scales": { "delta": 0.1, "alpha": 0.4, "rho": 1.0, "h": 0.1, "tau": 0.025 },
            "t_final": 0.2,
            "initial_displacement": { "kind": "trig_bump", "amplitude": 0.1, "direction": [1.0, 0.5, 0.0] },
            "initial_velocity": { "kind": "trig_bump", "amplitude": 0.2, "direction": [0.0, 1.0, 0.0] },
            "force": {
                "amplitude": 1.0,
                "direction": [0.0, 1.0, 0.0],
                "spatial": { "kind": "sin_bump" },
                "temporal": { "kind": "sin", "omega": 10.0 }
            },
            "interpolants": { "rule": { "gauss_legendre": 8 }, "sensitivity_rule": { "geometric": 8 } }
        }
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    p
}

fn simulate(config: &Path, out: &Path) -> Output {
    run(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn check(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["check", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

/// Rewrites one cell of a CSV file.
fn edit_cell(path: &Path, row: usize, column: &str, f: impl Fn(f64) -> f64) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let col = lines[0].split(',').position(|c| c == column).expect("column");
    let mut cells: Vec<String> = lines[row].split(',').map(String::from).collect();
    let v: f64 = cells[col].parse().unwrap();
    cells[col] = format!("{:?}", f(v));
    lines[row] = cells.join(",");
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn zero_data_round_trip() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("zero");
    let o = simulate(&bundled("zero-data.json"), &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert!(manifest["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(manifest["phases"].as_array().unwrap().iter().any(|p| p["name"] == "solve"));
    for f in manifest["files"].as_array().unwrap() {
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
        assert!(out.join(f["path"].as_str().unwrap()).exists());
    }
    // every stored deformation is the identity
    let energy = run(&["plot-data", out.to_str().unwrap(), "--what", "energy"]);
    assert_eq!(code(&energy), 0);
    let text = String::from_utf8(energy.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[2..8].iter().all(|c| c.parse::<f64>().unwrap() == 0.0), "{line}");
    }
    let o = check(&out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn bundled_linearization_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("lin");
    let o = simulate(&bundled("linearization-d2.json"), &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = check(&out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn malformed_json_exits_2_with_position() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path().join("bad.json");
    fs::write(&p, "{\n  \"spec\": {\n    \"dim\": 2,,\n").unwrap();
    let o = run(&["simulate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json:3:"), "{}", stderr(&o));
}

#[test]
fn schema_violations_exit_2() {
    let tmp = TempDir::new().unwrap();
    let mut unknown = small_config();
    unknown["spec"]["colour"] = json!("red");
    let mut indivisible = small_config();
    indivisible["spec"]["scales"]["tau"] = json!(0.03);
    let mut thin = small_config();
    thin["spec"]["material"]["elastic"]["p_exp"] = json!(1.5);
    for (name, cfg) in [("unknown", unknown), ("indivisible", indivisible), ("thin", thin)] {
        let p = write_config(tmp.path(), &format!("{name}.json"), &cfg);
        let o = simulate(&p, &tmp.path().join(name));
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
        assert!(!tmp.path().join(name).join("manifest.json").exists());
    }
}

#[test]
fn corrupted_ledger_row_exits_4_naming_it() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", &small_config());
    let out = tmp.path().join("run");
    assert_eq!(code(&simulate(&cfg, &out)), 0);
    edit_cell(&out.join("ledger.csv"), 5, "total", |v| v + 1.0);
    let o = check(&out, &[]);
    assert_eq!(code(&o), 4);
    let msg = stderr(&o);
    assert!(msg.contains("ledger.csv row 5 (step 5)"), "{msg}");
    assert!(msg.contains("column total"), "{msg}");
}

#[test]
fn tolerance_scale_is_honored() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", &small_config());
    let out = tmp.path().join("run");
    assert_eq!(code(&simulate(&cfg, &out)), 0);
    edit_cell(&out.join("ledger.csv"), 2, "dissipation_R", |v| v * (1.0 + 1e-9));
    assert_eq!(code(&check(&out, &[])), 4);
    let o = check(&out, &["--tol-scale", "1e6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&check(&out, &["--tol-scale", "-1"])), 2);
}

#[test]
fn runs_and_plot_data_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", &small_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&simulate(&cfg, &a)), 0);
    assert_eq!(code(&simulate(&cfg, &b)), 0);
    for f in ["ledger.csv", "slacks.csv", "trajectory.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    for what in ["energy", "errors"] {
        let first = run(&["plot-data", a.to_str().unwrap(), "--what", what]);
        let second = run(&["plot-data", a.to_str().unwrap(), "--what", what]);
        assert_eq!(code(&first), 0, "{}", stderr(&first));
        assert!(!first.stdout.is_empty());
        assert_eq!(first.stdout, second.stdout);
    }
    let header = run(&["plot-data", a.to_str().unwrap(), "--what", "energy"]).stdout;
    let header = String::from_utf8(header).unwrap();
    assert!(header.starts_with(
        "step,time,elastic_W,second_grade_P,dissipation_R,inertial,force_work,total,"
    ));
}

#[test]
fn unknown_plot_kind_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("zero");
    assert_eq!(code(&simulate(&bundled("zero-data.json"), &out)), 0);
    assert_eq!(code(&run(&["plot-data", out.to_str().unwrap(), "--what", "spectrum"])), 2);
    assert_eq!(code(&run(&["plot-data", out.to_str().unwrap(), "--what", "rates"])), 2);
    assert_eq!(code(&run(&["plot-data", tmp.path().to_str().unwrap(), "--what", "energy"])), 2);
}

#[test]
fn single_level_sweep_equals_simulate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", &small_config());
    let sim = tmp.path().join("sim");
    let sweep = tmp.path().join("sweep");
    assert_eq!(code(&simulate(&cfg, &sim)), 0);
    let o = run(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--param", "tau", "--levels", "1", "--out",
        sweep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let level = sweep.join("level_00");
    for f in ["ledger.csv", "slacks.csv", "trajectory.json"] {
        assert_eq!(fs::read(sim.join(f)).unwrap(), fs::read(level.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(sweep.join("rates.csv")).unwrap(), "param,error,slope\n");
}

#[test]
fn tau_sweep_writes_rates_and_checks() {
    let tmp = TempDir::new().unwrap();
    let mut small = small_config();
    small["spec"]["scales"]["tau"] = json!(0.05);
    small["spec"]["t_final"] = json!(0.1);
    small["sweep"] = json!({ "param": "tau", "levels": 3 });
    let cfg = write_config(tmp.path(), "small.json", &small);
    let out = tmp.path().join("sweep");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rates = run(&["plot-data", out.to_str().unwrap(), "--what", "rates"]);
    let text = String::from_utf8(rates.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,error,slope");
    assert_eq!(lines.len(), 3);
    let params: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(params, vec![0.05, 0.025]);
    let errors = run(&["plot-data", out.to_str().unwrap(), "--what", "errors"]);
    assert!(String::from_utf8(errors.stdout).unwrap().starts_with("level,param,time,error\n"));
    let o = check(&out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn solver_failure_exits_3_and_keeps_partial_output() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["spec"]["newton"] = json!({ "max_iters": 1, "grad_tol": 1e-15, "abs_tol": 1e-300 });
    let p = write_config(tmp.path(), "stiff.json", &cfg);
    let out = tmp.path().join("run");
    let o = simulate(&p, &out);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("partial results kept"));
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "partial");
    assert!(manifest["error"].as_str().unwrap().contains("converge"));
}

#[test]
fn thread_cap_must_be_positive() {
    let tmp = TempDir::new().unwrap();
    let o = bin()
        .args(["simulate", "--config", bundled("zero-data.json").to_str().unwrap(), "--out"])
        .arg(tmp.path().join("z"))
        .env("VISCOFLOW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = bin()
        .args(["simulate", "--config", bundled("zero-data.json").to_str().unwrap(), "--out"])
        .arg(tmp.path().join("z"))
        .env("VISCOFLOW_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
