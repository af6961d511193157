//! Optional TOML settings file. Every field is optional; command-line flags
//! override what is set here, and built-in defaults fill the rest.
//!
//! ```toml
//! output_dir = "results"
//! seed = 7
//!
//! [run]
//! optimizer = "w05_iwsw2"
//! function = "griewank"
//! n_runs = 20
//!
//! [suite]
//! functions = ["sphere", "rastrigin"]
//!
//! [trace]
//! preset = "fig4"
//! steps = 200
//!
//! [schedule]
//! kind = "sigmoid"
//! value_start = 0.7
//! value_end = 0.5
//! k = 10.0
//! t_max = 10000
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use psolab_core::{FunctionId, LabMode, Optimizer, ScheduleKind, VelocityInit};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub suite: SuiteSection,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// A builtin optimizer, or the name given to `custom_optimizer`.
    pub optimizer: Option<String>,
    pub custom_optimizer: Option<Optimizer>,
    pub function: Option<FunctionId>,
    pub n_runs: Option<usize>,
    pub n_particles: Option<usize>,
    pub max_time_steps: Option<u64>,
    pub stop_on_acceptable: Option<bool>,
    pub dimension: Option<usize>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub acceptable_error: Option<f64>,
    pub velocity_init: Option<VelocityInit>,
    pub trajectory_run: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    pub optimizers: Option<Vec<String>>,
    pub functions: Option<Vec<FunctionId>>,
    pub n_runs: Option<usize>,
    pub n_particles: Option<usize>,
    pub max_time_steps: Option<u64>,
    pub stop_on_acceptable: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub preset: Option<String>,
    pub mode: Option<LabMode>,
    pub w: Option<f64>,
    pub iw: Option<f64>,
    pub sw: Option<f64>,
    pub pbest: Option<f64>,
    pub gbest: Option<f64>,
    pub x0: Option<f64>,
    pub v0: Option<f64>,
    pub v0_spread: Option<f64>,
    pub vmax: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: Option<ScheduleKind>,
    pub value_start: Option<f64>,
    pub value_end: Option<f64>,
    pub k: Option<f64>,
    pub t_max: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}
