//! Run configuration. Values come from built-in defaults, then an optional
//! TOML file, then command-line flags. The output directory may also be set
//! through `SMALLDEV_OUT_DIR`, which sits between the file and `--out`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stable_smalldev::model::ShiftFunction;

use crate::CliError;

pub const OUT_DIR_ENV: &str = "SMALLDEV_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub seed: u64,
    pub workers: usize,
    pub n_paths: usize,
    pub n_steps: usize,
    pub out: Option<PathBuf>,
    pub simulate: SimulateBlock,
    pub smallball: SmallballBlock,
    pub constants: ConstantsBlock,
    pub lil: LilBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            seed: 1,
            workers: 1,
            n_paths: 10_000,
            n_steps: 2048,
            out: None,
            simulate: SimulateBlock::default(),
            smallball: SmallballBlock::default(),
            constants: ConstantsBlock::default(),
            lil: LilBlock::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Increments on the grid only.
    Grid,
    /// Jumps above `eps` resolved, Gaussian proxy below.
    Jumps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateBlock {
    pub mode: SimMode,
    pub eps: f64,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self {
            mode: SimMode::Jumps,
            eps: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    Small,
    Middle,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallballBlock {
    pub r: f64,
    pub regime: RegimeName,
    /// `λr^{α−1}` in the middle regime.
    pub c: f64,
    /// Shift scale in the small and large regimes.
    pub lambda: f64,
    /// `zero`, `identity`, `tent`, or a path to a JSON knots file.
    pub shift: String,
    /// Levels for `smallball tail`.
    pub x: Vec<f64>,
}

impl Default for SmallballBlock {
    fn default() -> Self {
        Self {
            r: 0.8,
            regime: RegimeName::Middle,
            c: 0.2,
            lambda: 0.5,
            shift: "identity".into(),
            x: vec![5.0, 10.0, 20.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsBlock {
    /// Extra α values; empty means just the top-level `alpha`.
    pub alphas: Vec<f64>,
    pub n_grid: usize,
    /// Also fit K_α from simulated small-ball probabilities.
    pub mc: bool,
    pub r: Vec<f64>,
}

impl Default for ConstantsBlock {
    fn default() -> Self {
        Self {
            alphas: Vec::new(),
            n_grid: 1024,
            mc: false,
            r: vec![0.8, 1.0, 1.2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridName {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LilBlock {
    pub grid: GridName,
    pub gamma: f64,
    pub k_start: u64,
    pub k_end: u64,
    pub delta: f64,
    pub shift: String,
    /// Indices for `lil ratios`.
    pub k: Vec<u64>,
    pub log_exp: Option<f64>,
    pub loglog_exp: Option<f64>,
    pub log_t_max: f64,
}

impl Default for LilBlock {
    fn default() -> Self {
        Self {
            grid: GridName::Lower,
            gamma: 1.5,
            k_start: 1000,
            k_end: 1100,
            delta: 0.5,
            shift: "identity".into(),
            k: vec![1_000_000],
            log_exp: None,
            loglog_exp: None,
            log_t_max: 1e6,
        }
    }
}

/// Flags that may override file values. `None` leaves the file value alone.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct GlobalFlags {
    /// Stability index in (1, 2).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Number of paths.
    #[arg(long = "n", global = true)]
    pub n_paths: Option<usize>,
    /// Grid steps per path.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Output directory for JSON and CSV artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            key: config_error_key(&e),
            msg: e.message().to_owned(),
        })
    }

    /// Defaults, then `--config`, then the output-directory variable, then flags.
    pub fn resolve(flags: &GlobalFlags, env_out: Option<PathBuf>) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(dir) = env_out {
            cfg.out = Some(dir);
        }
        if let Some(v) = flags.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.workers {
            cfg.workers = v;
        }
        if let Some(v) = flags.n_paths {
            cfg.n_paths = v;
        }
        if let Some(v) = flags.steps {
            cfg.n_steps = v;
        }
        if let Some(v) = &flags.out {
            cfg.out = Some(v.clone());
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: &str| {
            Err(CliError::Config {
                key: key.into(),
                msg: msg.into(),
            })
        };
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return bad("alpha", "must lie in (1, 2)");
        }
        if self.workers == 0 {
            return bad("workers", "must be at least 1");
        }
        if self.n_paths == 0 {
            return bad("n_paths", "must be at least 1");
        }
        if self.n_steps == 0 {
            return bad("n_steps", "must be at least 1");
        }
        if !(self.simulate.eps > 0.0) {
            return bad("simulate.eps", "must be positive");
        }
        let sb = &self.smallball;
        if !(sb.r > 0.0) {
            return bad("smallball.r", "must be positive");
        }
        if !(sb.c > 0.0) {
            return bad("smallball.c", "must be positive");
        }
        if !(sb.lambda >= 0.0) {
            return bad("smallball.lambda", "must be nonnegative");
        }
        if sb.x.iter().any(|x| !(*x > 0.0)) {
            return bad("smallball.x", "levels must be positive");
        }
        if self.constants.alphas.iter().any(|a| !(*a > 1.0 && *a < 2.0)) {
            return bad("constants.alphas", "every value must lie in (1, 2)");
        }
        if self.constants.n_grid < 64 {
            return bad("constants.n_grid", "must be at least 64");
        }
        if self.constants.r.iter().any(|r| !(*r > 0.0)) {
            return bad("constants.r", "radii must be positive");
        }
        let lil = &self.lil;
        if !(0.0..=1.0).contains(&lil.delta) {
            return bad("lil.delta", "must lie in [0, 1]");
        }
        if lil.k_end < lil.k_start {
            return bad("lil.k_end", "must not precede lil.k_start");
        }
        if !(lil.log_t_max > 4.0) {
            return bad("lil.log_t_max", "must exceed 4");
        }
        Ok(())
    }
}

fn config_error_key(e: &toml::de::Error) -> String {
    // toml reports unknown fields as "unknown field `name`, expected ..."
    let msg = e.message();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return rest[..end].to_owned();
        }
    }
    "<file>".into()
}

/// `zero`, `identity`, `tent`, or a JSON knots file.
pub fn load_shift(spec: &str, key: &str) -> Result<ShiftFunction, CliError> {
    match spec {
        "zero" => Ok(ShiftFunction::zero()),
        "identity" => Ok(ShiftFunction::identity()),
        "tent" => Ok(ShiftFunction::tent()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.into(),
                source: e,
            })?;
            ShiftFunction::from_json(&text).map_err(|e| CliError::Config {
                key: key.into(),
                msg: e.to_string(),
            })
        }
    }
}
