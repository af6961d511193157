//! Repeated seeded runs of an optimizer on a benchmark function, with the
//! best / worst / mean / standard-deviation summaries used to compare
//! parameter settings.
//!
//! Run `r` of an experiment is seeded with `base_seed + r`. Runs execute in
//! parallel, but results are always ordered by run index and are identical
//! to a sequential execution.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{FunctionId, ObjectiveSpec};
use crate::error::{Error, Result};
use crate::format::format_float;
use crate::schedule::{ParameterSet, ScheduleSpec, VmaxPolicy};
use crate::swarm::{check_layout, initialize_swarm, SubSwarmSpec, SwarmState, VelocityInit};

/// A homogeneous swarm or a swarm split into sub-swarms with their own
/// parameters and a shared global best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Homogeneous(ParameterSet),
    MultiSwarm(Vec<SubSwarmSpec>),
}

impl Optimizer {
    pub fn validate(&self, n_particles: usize) -> Result<()> {
        if n_particles == 0 {
            return Err(Error::invalid("a swarm needs at least one particle"));
        }
        match self {
            Optimizer::Homogeneous(params) => params.validate(),
            Optimizer::MultiSwarm(subs) => check_layout(subs, n_particles),
        }
    }

    /// Same optimizer for a swarm of `n_particles`; sub-swarms are resized as
    /// evenly as possible, earlier sub-swarms taking the remainder.
    pub fn resized(&self, n_particles: usize) -> Result<Optimizer> {
        match self {
            Optimizer::Homogeneous(_) => Ok(self.clone()),
            Optimizer::MultiSwarm(subs) => {
                let k = subs.len();
                if k == 0 || n_particles < k {
                    return Err(Error::invalid(format!(
                        "cannot split {n_particles} particles into {k} sub-swarms"
                    )));
                }
                let resized = subs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| SubSwarmSpec {
                        parameter_set: s.parameter_set.clone(),
                        particle_count: n_particles / k + usize::from(i < n_particles % k),
                    })
                    .collect();
                Ok(Optimizer::MultiSwarm(resized))
            }
        }
    }

    fn step(&self, state: &mut SwarmState, spec: &ObjectiveSpec, t_max: u64) -> Result<()> {
        match self {
            Optimizer::Homogeneous(params) => state.step(spec, params, t_max),
            Optimizer::MultiSwarm(subs) => state.step_multiswarm(spec, subs, t_max),
        }
    }
}

/// One of the six optimizers compared in the experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedOptimizer {
    /// Identifier used on the command line and in output file names.
    pub name: &'static str,
    /// Human-readable description of the setting.
    pub label: &'static str,
    pub optimizer: Optimizer,
}

fn homogeneous_settings() -> [ParameterSet; 4] {
    [
        ParameterSet::inertia(0.7, 2.0, 2.0),
        ParameterSet::inertia(0.7298, 1.49609, 1.49609),
        ParameterSet::inertia(0.5, 2.0, 2.0),
        ParameterSet::inertia(0.7, 2.0, 2.0)
            .with_inertia_schedule(ScheduleSpec::sigmoid(0.7, 0.5, 10.0)),
    ]
    .map(|p| p.with_vmax(VmaxPolicy::HalfRange))
}

/// The four homogeneous settings followed by the two multi-swarms built from
/// them (settings 1-3 and 2-4, ten particles each).
pub fn builtin_optimizers() -> Vec<NamedOptimizer> {
    let [fast_escape, constriction, fine, sigmoid] = homogeneous_settings();
    let sub = |p: &ParameterSet| SubSwarmSpec {
        parameter_set: p.clone(),
        particle_count: 10,
    };
    vec![
        NamedOptimizer {
            name: "w07_iwsw2",
            label: "w = 0.7, iw = sw = 2",
            optimizer: Optimizer::Homogeneous(fast_escape.clone()),
        },
        NamedOptimizer {
            name: "w07298_iwsw149609",
            label: "w = 0.7298, iw = sw = 1.49609",
            optimizer: Optimizer::Homogeneous(constriction.clone()),
        },
        NamedOptimizer {
            name: "w05_iwsw2",
            label: "w = 0.5, iw = sw = 2",
            optimizer: Optimizer::Homogeneous(fine.clone()),
        },
        NamedOptimizer {
            name: "sigmoid_iwsw2",
            label: "w sigmoid 0.7 -> 0.5 (k = 10), iw = sw = 2",
            optimizer: Optimizer::Homogeneous(sigmoid.clone()),
        },
        NamedOptimizer {
            name: "multiswarm1",
            label: "Multi-swarm 1 (1, 2, 3)",
            optimizer: Optimizer::MultiSwarm(vec![
                sub(&fast_escape),
                sub(&constriction),
                sub(&fine),
            ]),
        },
        NamedOptimizer {
            name: "multiswarm2",
            label: "Multi-swarm 2 (2, 3, 4)",
            optimizer: Optimizer::MultiSwarm(vec![sub(&constriction), sub(&fine), sub(&sigmoid)]),
        },
    ]
}

pub fn builtin_optimizer(name: &str) -> Result<NamedOptimizer> {
    let all = builtin_optimizers();
    let names: Vec<_> = all.iter().map(|o| o.name).collect();
    all.into_iter().find(|o| o.name == name).ok_or_else(|| {
        Error::invalid(format!(
            "unknown optimizer `{name}`; valid choices: {}",
            names.join(", ")
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub optimizer: Optimizer,
    pub objective: ObjectiveSpec,
    pub n_particles: usize,
    pub n_runs: usize,
    pub max_time_steps: u64,
    pub base_seed: u64,
    pub stop_on_acceptable: bool,
    #[serde(default)]
    pub velocity_init: VelocityInit,
}

impl ExperimentSpec {
    /// 30 particles, 20 runs of at most 10000 time-steps, stopping at the
    /// acceptable error, zero initial velocities.
    pub fn new(optimizer: Optimizer, objective: ObjectiveSpec) -> Self {
        ExperimentSpec {
            optimizer,
            objective,
            n_particles: 30,
            n_runs: 20,
            max_time_steps: 10_000,
            base_seed: 0,
            stop_on_acceptable: true,
            velocity_init: VelocityInit::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        self.optimizer.validate(self.n_particles)?;
        if self.n_runs == 0 {
            return Err(Error::invalid("n_runs must be at least 1"));
        }
        if self.max_time_steps == 0 {
            return Err(Error::invalid("max_time_steps must be at least 1"));
        }
        Ok(())
    }

    pub fn seed_for(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run_index: usize,
    pub seed: u64,
    /// Global-best conflict when the run ended.
    pub final_conflict: f64,
    pub termination_step: u64,
    /// `final_conflict < acceptable_error`.
    pub success: bool,
    /// First time-step at which the global best beat the acceptable error.
    pub first_success_step: Option<u64>,
}

pub fn run_once(spec: &ExperimentSpec, run_index: usize) -> Result<RunOutcome> {
    run_once_observed(spec, run_index, |_| {})
}

/// Like [`run_once`], calling `observer` with the initial state and after
/// every time-step.
pub fn run_once_observed(
    spec: &ExperimentSpec,
    run_index: usize,
    mut observer: impl FnMut(&SwarmState),
) -> Result<RunOutcome> {
    spec.validate()?;
    let seed = spec.seed_for(run_index);
    let objective = &spec.objective;
    let mut state = initialize_swarm(objective, spec.n_particles, seed, spec.velocity_init)?;
    observer(&state);
    let mut first_success_step = None;
    while state.time_step < spec.max_time_steps {
        spec.optimizer
            .step(&mut state, objective, spec.max_time_steps)?;
        observer(&state);
        if first_success_step.is_none() && state.gbest_conflict < objective.acceptable_error {
            first_success_step = Some(state.time_step);
            if spec.stop_on_acceptable {
                break;
            }
        }
    }
    Ok(RunOutcome {
        run_index,
        seed,
        final_conflict: state.gbest_conflict,
        termination_step: state.time_step,
        success: state.gbest_conflict < objective.acceptable_error,
        first_success_step,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub best_solution: f64,
    pub worst_solution: f64,
    pub mean_best: f64,
    pub std_best: f64,
    pub mean_time_steps: f64,
    pub std_time_steps: f64,
    pub successes: usize,
    pub per_run: Vec<RunOutcome>,
}

impl RunStatistics {
    /// Aggregates outcomes; standard deviations use the `n - 1` denominator.
    pub fn from_runs(per_run: Vec<RunOutcome>) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::invalid("no runs to aggregate"));
        }
        let conflicts: Vec<f64> = per_run.iter().map(|r| r.final_conflict).collect();
        let steps: Vec<f64> = per_run.iter().map(|r| r.termination_step as f64).collect();
        let (mean_best, std_best) = mean_and_std(&conflicts);
        let (mean_time_steps, std_time_steps) = mean_and_std(&steps);
        Ok(RunStatistics {
            best_solution: conflicts.iter().copied().fold(f64::INFINITY, f64::min),
            worst_solution: conflicts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_best,
            std_best,
            mean_time_steps,
            std_time_steps,
            successes: per_run.iter().filter(|r| r.success).count(),
            per_run,
        })
    }
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunStatistics> {
    spec.validate()?;
    let runs = (0..spec.n_runs)
        .into_par_iter()
        .map(|r| run_once(spec, r))
        .collect::<Result<Vec<_>>>()?;
    RunStatistics::from_runs(runs)
}

/// Experiment settings shared by every cell of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSettings {
    pub n_particles: usize,
    pub n_runs: usize,
    pub max_time_steps: u64,
    pub base_seed: u64,
    pub stop_on_acceptable: bool,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        let d = ExperimentSpec::new(
            Optimizer::Homogeneous(ParameterSet::inertia(0.7, 2.0, 2.0)),
            ObjectiveSpec::default_for(FunctionId::Sphere),
        );
        SuiteSettings {
            n_particles: d.n_particles,
            n_runs: d.n_runs,
            max_time_steps: d.max_time_steps,
            base_seed: d.base_seed,
            stop_on_acceptable: d.stop_on_acceptable,
        }
    }
}

impl SuiteSettings {
    pub fn experiment(
        &self,
        optimizer: &Optimizer,
        function: FunctionId,
    ) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            optimizer: optimizer.resized(self.n_particles)?,
            objective: ObjectiveSpec::default_for(function),
            n_particles: self.n_particles,
            n_runs: self.n_runs,
            max_time_steps: self.max_time_steps,
            base_seed: self.base_seed,
            stop_on_acceptable: self.stop_on_acceptable,
            velocity_init: VelocityInit::Zero,
        })
    }
}

/// One optimizer x function entry of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    pub optimizer: String,
    pub label: String,
    pub function: FunctionId,
    pub spec: Option<ExperimentSpec>,
    pub statistics: Option<RunStatistics>,
    pub error: Option<String>,
}

/// Runs every optimizer on every function. Cells are ordered optimizer-major;
/// a failing cell records its error instead of aborting the suite.
/// `on_cell` is called as each cell finishes (possibly out of order).
pub fn run_suite(
    optimizers: &[NamedOptimizer],
    functions: &[FunctionId],
    settings: &SuiteSettings,
    on_cell: impl Fn(&SuiteCell) + Sync,
) -> Vec<SuiteCell> {
    let grid: Vec<(&NamedOptimizer, FunctionId)> = optimizers
        .iter()
        .flat_map(|o| functions.iter().map(move |&f| (o, f)))
        .collect();
    grid.into_par_iter()
        .map(|(named, function)| {
            let spec = settings.experiment(&named.optimizer, function);
            let outcome = spec
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|s| run_experiment(s).map_err(|e| e.to_string()));
            let (statistics, error) = match outcome {
                Ok(stats) => (Some(stats), None),
                Err(e) => (None, Some(e)),
            };
            let cell = SuiteCell {
                optimizer: named.name.to_string(),
                label: named.label.to_string(),
                function,
                spec: spec.ok(),
                statistics,
                error,
            };
            on_cell(&cell);
            cell
        })
        .collect()
}

pub const STATISTICS_HEADER: [&str; 11] = [
    "optimizer",
    "function",
    "best_solution",
    "worst_solution",
    "mean_best",
    "std_best",
    "mean_time_steps",
    "std_time_steps",
    "successes",
    "n_runs",
    "error",
];

fn statistics_row(
    optimizer: &str,
    function: FunctionId,
    stats: Option<&RunStatistics>,
    error: Option<&str>,
) -> Vec<String> {
    let mut row = vec![optimizer.to_string(), function.to_string()];
    match stats {
        Some(s) => {
            row.extend(
                [
                    s.best_solution,
                    s.worst_solution,
                    s.mean_best,
                    s.std_best,
                    s.mean_time_steps,
                    s.std_time_steps,
                ]
                .map(format_float),
            );
            row.push(s.successes.to_string());
            row.push(s.per_run.len().to_string());
        }
        None => row.extend(std::iter::repeat_n(String::new(), 8)),
    }
    row.push(error.unwrap_or_default().to_string());
    row
}

/// One header plus one row of summary statistics.
pub fn write_statistics_csv<W: Write>(
    optimizer: &str,
    function: FunctionId,
    stats: &RunStatistics,
    out: W,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(STATISTICS_HEADER)?;
    csv.write_record(statistics_row(optimizer, function, Some(stats), None))?;
    csv.flush()?;
    Ok(())
}

/// Consolidated table: one row per optimizer x function, in cell order.
pub fn write_suite_csv<W: Write>(cells: &[SuiteCell], out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(STATISTICS_HEADER)?;
    for c in cells {
        csv.write_record(statistics_row(
            &c.optimizer,
            c.function,
            c.statistics.as_ref(),
            c.error.as_deref(),
        ))?;
    }
    csv.flush()?;
    Ok(())
}

/// JSON document with the full experiment spec and per-run detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub optimizer_name: String,
    pub spec: ExperimentSpec,
    pub statistics: RunStatistics,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
