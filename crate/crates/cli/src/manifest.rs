//! Run and sweep manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use viscoflow_core::persist::write_atomic;
use viscoflow_core::{RateReport, SweepKind, Tolerances};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// The solver stopped early; only the steps before the failure are stored.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Wall-clock bookkeeping for named phases.
#[derive(Default)]
pub struct PhaseClock {
    phases: Vec<Phase>,
}

impl PhaseClock {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(name, start.elapsed().as_secs_f64());
        out
    }

    pub fn record(&mut self, name: &str, seconds: f64) {
        self.phases.push(Phase {
            name: name.to_string(),
            seconds,
        });
    }

    pub fn into_phases(self) -> Vec<Phase> {
        self.phases
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub tolerance: f64,
    /// The least favorable value seen, in the units the tolerance applies to.
    pub worst: Option<f64>,
    pub worst_step: Option<usize>,
    /// Failing steps or rows, empty on success.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileEntry {
    pub fn of(dir: &Path, rel: &Path) -> CliResult<Self> {
        let data = fs::read(dir.join(rel)).map_err(|e| CliError::failure(format!("{}: {e}", rel.display())))?;
        Ok(Self {
            path: rel.to_path_buf(),
            bytes: data.len() as u64,
            sha256: sha256_hex(&data),
        })
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files whose bytes no longer match the inventory.
pub fn stale_files(dir: &Path, files: &[FileEntry]) -> Vec<PathBuf> {
    files
        .iter()
        .filter(|f| FileEntry::of(dir, &f.path).map(|now| now.sha256 != f.sha256).unwrap_or(true))
        .map(|f| f.path.clone())
        .collect()
}

/// Written last into every run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub code_version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: RunConfig,
    pub tolerances: Tolerances,
    pub phases: Vec<Phase>,
    pub checks: Vec<CheckOutcome>,
    pub files: Vec<FileEntry>,
}

/// Written last into a sweep directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub format_version: u32,
    pub code_version: String,
    pub param: SweepKind,
    pub config: RunConfig,
    /// Level directories, coarsest first.
    pub levels: Vec<PathBuf>,
    pub level_params: Vec<f64>,
    /// Directory of the linear comparison run, for `delta` and `diagonal`.
    pub reference: Option<PathBuf>,
    /// What the rate errors measure.
    pub error_kind: String,
    pub rate: Option<RateReport>,
    pub phases: Vec<Phase>,
    pub files: Vec<FileEntry>,
}

pub fn code_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::failure(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::json(path, &e))
}
