//! Particle swarm optimization laboratory.
//!
//! - [`benchmarks`]: the five test functions with their search boxes and
//!   acceptable errors.
//! - [`schedule`]: inertia / learning-weight / `vmax` schedules, the
//!   constriction factor and the polynomial inertia-acceleration correlation.
//! - [`swarm`]: the global-best engine with synchronous best updates and
//!   multi-swarm composition.
//! - [`lab`]: the one-dimensional single-particle recurrences and their
//!   classification.
//! - [`harness`]: seeded multi-run experiments and summary statistics.

// NaN must fail parameter checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod error;
mod format;
pub mod harness;
pub mod lab;
pub mod schedule;
pub mod swarm;

pub use benchmarks::{default_spec, FunctionId, ObjectiveSpec};
pub use error::{Error, Result};
pub use format::format_float;
pub use harness::{
    builtin_optimizer, builtin_optimizers, run_experiment, run_once, ExperimentReport,
    ExperimentSpec, NamedOptimizer, Optimizer, RunOutcome, RunStatistics,
};
pub use lab::{run_lab, Classification, LabConfig, LabMode, Trajectory};
pub use schedule::{
    acceleration_from_inertia, constriction_factor, learning_weight_swap, Constriction,
    ParameterSet, ScheduleKind, ScheduleSpec, VmaxPolicy,
};
pub use swarm::{
    initialize_swarm, Particle, SubSwarmSpec, SwarmState, UniformSource, VelocityInit,
};
