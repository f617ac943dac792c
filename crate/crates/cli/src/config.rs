//! Run configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use viscoflow_core::{RunSpec, SweepKind, Tolerances};

use crate::error::{CliError, CliResult};

/// Default sweep settings stored alongside a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDefaults {
    pub param: SweepKind,
    pub levels: usize,
}

/// Contents of a JSON configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: RunSpec,
    /// Where results go unless `--out` is given.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Store every state; `check` needs them to re-run the field diagnostics.
    #[serde(default = "yes")]
    pub save_states: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Used by `sweep` when `--param` or `--levels` is omitted.
    #[serde(default)]
    pub sweep: Option<SweepDefaults>,
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_slice(&bytes).map_err(|e| CliError::json(path, &e))?;
        cfg.validate().map_err(|e| e.context(path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.spec.validate().map_err(|e| CliError::config(e.to_string()))?;
        let t = &self.tolerances;
        let all = [t.simplified, t.refined, t.shadow, t.fenchel, t.fenchel_floor];
        if all.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(CliError::config("tolerances must be finite and nonnegative"));
        }
        if let Some(s) = self.sweep {
            if s.levels == 0 {
                return Err(CliError::config("sweep levels must be positive"));
            }
        }
        Ok(())
    }

    /// `--out`, else `output_dir`, else `runs/<config stem>`.
    pub fn output_dir(&self, out: Option<&Path>, config_path: &Path) -> PathBuf {
        if let Some(o) = out {
            return o.to_path_buf();
        }
        if let Some(o) = &self.output_dir {
            return o.clone();
        }
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        PathBuf::from("runs").join(stem)
    }
}
