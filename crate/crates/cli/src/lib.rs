//! The `psolab` command line: repeated optimizer runs, the full
//! optimizer x function grid, single-particle traces and schedule sampling.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 for failures while
//! running or writing results.

mod config;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use psolab_core::harness::{
    run_once_observed, run_suite, write_statistics_csv, write_suite_csv, SuiteSettings,
};
use psolab_core::lab::{write_trajectory_csv, LabSummary};
use psolab_core::swarm::TrajectoryWriter;
use psolab_core::{
    acceleration_from_inertia, builtin_optimizer, format_float, run_experiment, run_lab,
    ExperimentReport, ExperimentSpec, FunctionId, LabConfig, LabMode, ObjectiveSpec, ScheduleKind,
    ScheduleSpec,
};

pub use config::FileConfig;

const DEFAULT_OUTPUT_DIR: &str = "out";
const DEFAULT_T_MAX: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "psolab",
    version,
    about = "Particle swarm optimization laboratory"
)]
pub struct Cli {
    /// TOML settings file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory receiving the output files [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Base seed (run r of an experiment uses seed + r).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Repeated seeded runs of one optimizer on one function.
    Run(RunArgs),
    /// Every optimizer on every function, one table row per pair.
    Suite(SuiteArgs),
    /// One particle in one dimension.
    Trace(TraceArgs),
    /// Sample a weight schedule at every time-step.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Builtin optimizer name.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long, visible_alias = "runs")]
    pub n_runs: Option<usize>,
    #[arg(long, visible_alias = "particles")]
    pub n_particles: Option<usize>,
    #[arg(long, visible_alias = "max-steps")]
    pub max_time_steps: Option<u64>,
    #[arg(long, value_name = "BOOL")]
    pub stop_on_acceptable: Option<bool>,
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub acceptable_error: Option<f64>,
    /// Also dump every particle of this run at every time-step.
    #[arg(long, value_name = "RUN")]
    pub trajectory_run: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Comma-separated optimizer names [default: all builtins]
    #[arg(long, value_delimiter = ',')]
    pub optimizers: Option<Vec<String>>,
    /// Comma-separated function names [default: all five]
    #[arg(long, value_delimiter = ',')]
    pub functions: Option<Vec<String>>,
    #[arg(long, visible_alias = "runs")]
    pub n_runs: Option<usize>,
    #[arg(long, visible_alias = "particles")]
    pub n_particles: Option<usize>,
    #[arg(long, visible_alias = "max-steps")]
    pub max_time_steps: Option<u64>,
    #[arg(long, value_name = "BOOL")]
    pub stop_on_acceptable: Option<bool>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// fig1, fig2, fig4, fig5 or fig6.
    #[arg(long)]
    pub preset: Option<String>,
    /// deterministic, average or stochastic.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub iw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pbest: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gbest: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub v0_spread: Option<f64>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// constant, linear, sigmoid or poly_correlated.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub value_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub value_end: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub t_max: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<psolab_core::Error> for CliError {
    fn from(e: psolab_core::Error) -> Self {
        if e.is_invalid_argument() {
            CliError::Validation(e.into())
        } else {
            CliError::Runtime(e.into())
        }
    }
}

fn invalid(msg: impl fmt::Display) -> CliError {
    CliError::Validation(anyhow!("{msg}"))
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses the process arguments, runs the command and maps the outcome to an
/// exit status.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: Cli) -> CliResult {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Validation)?,
        None => FileConfig::default(),
    };
    let ctx = Common {
        output_dir: cli
            .output_dir
            .or_else(|| file.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        seed: cli.seed.or(file.seed),
    };
    match cli.command {
        Command::Run(args) => cmd_run(&ctx, &args, &file),
        Command::Suite(args) => cmd_suite(&ctx, &args, &file),
        Command::Trace(args) => cmd_trace(&ctx, &args, &file),
        Command::Schedule(args) => cmd_schedule(&ctx, &args, &file),
    }
}

struct Common {
    output_dir: PathBuf,
    seed: Option<u64>,
}

impl Common {
    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Writes through a temporary file in the target directory so readers never
/// see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let write = || -> anyhow::Result<()> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create directory {}", dir.display()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file()
                .set_permissions(fs::Permissions::from_mode(0o644))?;
        }
        tmp.persist(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    };
    write().map_err(runtime)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn parse_function(name: &str) -> CliResult<FunctionId> {
    Ok(FunctionId::from_str(name)?)
}

fn resolve_run(
    ctx: &Common,
    args: &RunArgs,
    file: &FileConfig,
) -> CliResult<(String, ExperimentSpec)> {
    let section = &file.run;
    let n_particles = args.n_particles.or(section.n_particles);
    let (name, optimizer) = match (&args.optimizer, &section.custom_optimizer) {
        (Some(name), _) => (name.clone(), builtin_optimizer(name)?.optimizer),
        (None, Some(custom)) => (
            section.optimizer.clone().unwrap_or_else(|| "custom".into()),
            custom.clone(),
        ),
        (None, None) => match &section.optimizer {
            Some(name) => (name.clone(), builtin_optimizer(name)?.optimizer),
            None => return Err(invalid("no optimizer given; pass --optimizer")),
        },
    };
    // builtin multi-swarms are laid out for 30 particles
    let optimizer = match (&args.optimizer, &section.custom_optimizer, n_particles) {
        (None, Some(_), _) | (_, _, None) => optimizer,
        (_, _, Some(n)) => optimizer.resized(n)?,
    };

    let function = match (&args.function, section.function) {
        (Some(name), _) => parse_function(name)?,
        (None, Some(f)) => f,
        (None, None) => return Err(invalid("no function given; pass --function")),
    };
    let mut objective = ObjectiveSpec::default_for(function);
    if let Some(d) = args.dimension.or(section.dimension) {
        objective.dimension = d;
    }
    if let Some(lo) = section.lower_bound {
        objective.lower_bound = lo;
    }
    if let Some(hi) = section.upper_bound {
        objective.upper_bound = hi;
    }
    if let Some(e) = args.acceptable_error.or(section.acceptable_error) {
        objective.acceptable_error = e;
    }

    let defaults = ExperimentSpec::new(optimizer, objective);
    let spec = ExperimentSpec {
        n_particles: n_particles.unwrap_or(defaults.n_particles),
        n_runs: args.n_runs.or(section.n_runs).unwrap_or(defaults.n_runs),
        max_time_steps: args
            .max_time_steps
            .or(section.max_time_steps)
            .unwrap_or(defaults.max_time_steps),
        base_seed: ctx.seed.unwrap_or(defaults.base_seed),
        stop_on_acceptable: args
            .stop_on_acceptable
            .or(section.stop_on_acceptable)
            .unwrap_or(defaults.stop_on_acceptable),
        velocity_init: section.velocity_init.unwrap_or(defaults.velocity_init),
        ..defaults
    };
    spec.validate()?;
    Ok((name, spec))
}

fn cmd_run(ctx: &Common, args: &RunArgs, file: &FileConfig) -> CliResult {
    let (name, spec) = resolve_run(ctx, args, file)?;
    let trajectory_run = args.trajectory_run.or(file.run.trajectory_run);
    if let Some(r) = trajectory_run {
        if r >= spec.n_runs {
            return Err(invalid(format!(
                "trajectory run {r} does not exist; runs are 0..{}",
                spec.n_runs
            )));
        }
    }
    let function = spec.objective.function_id;
    let stats = run_experiment(&spec)?;
    let stem = format!("{name}__{function}");

    let mut csv = Vec::new();
    write_statistics_csv(&name, function, &stats, &mut csv)?;
    write_atomic(&ctx.path(&format!("{stem}.csv")), &csv)?;
    let report = ExperimentReport {
        optimizer_name: name.clone(),
        spec: spec.clone(),
        statistics: stats.clone(),
    };
    write_atomic(
        &ctx.path(&format!("{stem}.json")),
        report.to_json()?.as_bytes(),
    )?;

    if let Some(r) = trajectory_run {
        let mut writer = Some(TrajectoryWriter::new(Vec::new(), spec.objective.dimension)?);
        let mut failure = None;
        run_once_observed(&spec, r, |state| {
            if let Some(w) = writer.as_mut() {
                if let Err(e) = w.record(state) {
                    failure = Some(e);
                    writer = None;
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        let bytes = writer.expect("writer survives without failure").finish()?;
        write_atomic(&ctx.path(&format!("{stem}__run{r}_trajectory.csv")), &bytes)?;
    }

    println!("optimizer        {name}");
    println!("function         {function}");
    println!("best_solution    {}", format_float(stats.best_solution));
    println!("worst_solution   {}", format_float(stats.worst_solution));
    println!("mean_best        {}", format_float(stats.mean_best));
    println!("std_best         {}", format_float(stats.std_best));
    println!("mean_time_steps  {}", format_float(stats.mean_time_steps));
    println!("std_time_steps   {}", format_float(stats.std_time_steps));
    println!("successes        {}/{}", stats.successes, spec.n_runs);
    Ok(())
}

fn cmd_suite(ctx: &Common, args: &SuiteArgs, file: &FileConfig) -> CliResult {
    let section = &file.suite;
    let optimizers = match args.optimizers.as_ref().or(section.optimizers.as_ref()) {
        Some(names) => names
            .iter()
            .map(|n| builtin_optimizer(n))
            .collect::<Result<Vec<_>, _>>()?,
        None => psolab_core::builtin_optimizers(),
    };
    let functions = match (&args.functions, &section.functions) {
        (Some(names), _) => names
            .iter()
            .map(|n| parse_function(n))
            .collect::<CliResult<Vec<_>>>()?,
        (None, Some(fs)) => fs.clone(),
        (None, None) => FunctionId::ALL.to_vec(),
    };
    if optimizers.is_empty() || functions.is_empty() {
        return Err(invalid(
            "the suite needs at least one optimizer and one function",
        ));
    }
    let defaults = SuiteSettings::default();
    let settings = SuiteSettings {
        n_particles: args
            .n_particles
            .or(section.n_particles)
            .unwrap_or(defaults.n_particles),
        n_runs: args.n_runs.or(section.n_runs).unwrap_or(defaults.n_runs),
        max_time_steps: args
            .max_time_steps
            .or(section.max_time_steps)
            .unwrap_or(defaults.max_time_steps),
        base_seed: ctx.seed.unwrap_or(defaults.base_seed),
        stop_on_acceptable: args
            .stop_on_acceptable
            .or(section.stop_on_acceptable)
            .unwrap_or(defaults.stop_on_acceptable),
    };
    if settings.n_runs == 0 || settings.max_time_steps == 0 {
        return Err(invalid("n_runs and max_time_steps must be at least 1"));
    }

    let total = optimizers.len() * functions.len();
    let done = AtomicUsize::new(0);
    let cells = run_suite(&optimizers, &functions, &settings, |cell| {
        let k = done.fetch_add(1, Ordering::SeqCst) + 1;
        match (&cell.statistics, &cell.error) {
            (Some(s), _) => println!(
                "[{k}/{total}] {} {}: mean best {}, {}/{} successes",
                cell.optimizer,
                cell.function,
                format_float(s.mean_best),
                s.successes,
                s.per_run.len()
            ),
            (None, e) => println!(
                "[{k}/{total}] {} {}: failed: {}",
                cell.optimizer,
                cell.function,
                e.as_deref().unwrap_or("unknown error")
            ),
        }
    });

    for cell in &cells {
        let json = serde_json::to_string_pretty(cell).map_err(runtime)?;
        let path = ctx.path(&format!("cells/{}__{}.json", cell.optimizer, cell.function));
        write_atomic(&path, json.as_bytes())?;
    }
    let mut csv = Vec::new();
    write_suite_csv(&cells, &mut csv)?;
    write_atomic(&ctx.path("suite.csv"), &csv)?;

    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        return Err(runtime(anyhow!("{failed} of {total} cells failed")));
    }
    Ok(())
}

fn parse_mode(name: &str) -> CliResult<LabMode> {
    match name {
        "deterministic" => Ok(LabMode::Deterministic),
        "average" => Ok(LabMode::Average),
        "stochastic" => Ok(LabMode::Stochastic),
        other => Err(invalid(format!(
            "unknown mode `{other}`; valid choices: deterministic, average, stochastic"
        ))),
    }
}

fn resolve_trace(
    ctx: &Common,
    args: &TraceArgs,
    file: &FileConfig,
) -> CliResult<(String, LabConfig)> {
    let section = &file.trace;
    let preset = args.preset.as_ref().or(section.preset.as_ref());
    let mut cfg = match preset {
        Some(name) => LabConfig::preset(name)?,
        None => LabConfig::at_rest(LabMode::Stochastic, 1.0, 2.0, 2.0, 1000),
    };
    if let Some(mode) = &args.mode {
        cfg.mode = parse_mode(mode)?;
    } else if let Some(mode) = section.mode {
        cfg.mode = mode;
    }
    let fields: [(&mut f64, Option<f64>, Option<f64>); 7] = [
        (&mut cfg.w, args.w, section.w),
        (&mut cfg.iw, args.iw, section.iw),
        (&mut cfg.sw, args.sw, section.sw),
        (&mut cfg.pbest, args.pbest, section.pbest),
        (&mut cfg.gbest, args.gbest, section.gbest),
        (&mut cfg.x0, args.x0, section.x0),
        (&mut cfg.v0, args.v0, section.v0),
    ];
    for (slot, flag, from_file) in fields {
        if let Some(v) = flag.or(from_file) {
            *slot = v;
        }
    }
    let spread = args.v0_spread.or(section.v0_spread);
    if spread.is_some() {
        cfg.v0_spread = spread;
    } else if args.v0.or(section.v0).is_some() {
        // an explicit start velocity replaces a preset's random one
        cfg.v0_spread = None;
    }
    if let Some(vmax) = args.vmax.or(section.vmax) {
        cfg.vmax = Some(vmax);
    }
    if let Some(steps) = args.steps.or(section.steps) {
        cfg.steps = steps;
    }
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok((preset.cloned().unwrap_or_else(|| "trace".into()), cfg))
}

fn cmd_trace(ctx: &Common, args: &TraceArgs, file: &FileConfig) -> CliResult {
    let (stem, cfg) = resolve_trace(ctx, args, file)?;
    let trajectory = run_lab(&cfg)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&trajectory, &mut csv)?;
    write_atomic(&ctx.path(&format!("{stem}.csv")), &csv)?;
    let summary = LabSummary::new(&cfg, &trajectory);
    let json = serde_json::to_string_pretty(&summary).map_err(runtime)?;
    write_atomic(&ctx.path(&format!("{stem}.json")), json.as_bytes())?;

    println!(
        "{stem}: {} mode, {} steps",
        variant_name(&cfg.mode),
        cfg.steps
    );
    println!("classification   {}", variant_name(&summary.classification));
    println!("attractor        {}", format_float(summary.attractor));
    println!("max_abs_x        {}", format_float(summary.max_abs_x));
    println!("final_x          {}", format_float(summary.final_x));
    Ok(())
}

/// Serialized name of a unit enum variant.
fn variant_name<T: serde::Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn parse_kind(name: &str) -> CliResult<ScheduleKind> {
    match name {
        "constant" => Ok(ScheduleKind::Constant),
        "linear" => Ok(ScheduleKind::LinearDecreasing),
        "sigmoid" => Ok(ScheduleKind::Sigmoid),
        "poly_correlated" => Ok(ScheduleKind::PolynomialCorrelated),
        other => Err(invalid(format!(
            "unknown schedule kind `{other}`; valid choices: constant, linear, sigmoid, poly_correlated"
        ))),
    }
}

fn cmd_schedule(ctx: &Common, args: &ScheduleArgs, file: &FileConfig) -> CliResult {
    let section = &file.schedule;
    let kind = match (&args.kind, section.kind) {
        (Some(k), _) => parse_kind(k)?,
        (None, Some(k)) => k,
        (None, None) => return Err(invalid("no schedule kind given; pass --kind")),
    };
    let kind_name = variant_name(&kind);
    let need = |flag: Option<f64>, from_file: Option<f64>, field: &str| {
        flag.or(from_file).ok_or_else(|| {
            invalid(format!(
                "a {kind_name} schedule needs --{}",
                field.replace('_', "-")
            ))
        })
    };
    let t_max = args.t_max.or(section.t_max).unwrap_or(DEFAULT_T_MAX);
    if t_max == 0 {
        return Err(invalid("t_max must be at least 1"));
    }
    let start = || need(args.value_start, section.value_start, "value_start");
    let end = || need(args.value_end, section.value_end, "value_end");
    let spec = match kind {
        ScheduleKind::Constant => ScheduleSpec::constant(start()?),
        ScheduleKind::LinearDecreasing | ScheduleKind::PolynomialCorrelated => {
            ScheduleSpec::linear(start()?, end()?)
        }
        ScheduleKind::Sigmoid => {
            ScheduleSpec::sigmoid(start()?, end()?, need(args.k, section.k, "k")?)
        }
    };
    spec.validate()?;

    let correlated = kind == ScheduleKind::PolynomialCorrelated;
    let mut csv = csv::Writer::from_writer(Vec::new());
    let header: &[&str] = if correlated {
        &["t", "w", "aw"]
    } else {
        &["t", "w"]
    };
    csv.write_record(header).map_err(runtime)?;
    let mut last = f64::NAN;
    for t in 0..=t_max {
        let w = spec.weight_at(t, t_max)?;
        let mut row = vec![t.to_string(), format_float(w)];
        if correlated {
            row.push(format_float(acceleration_from_inertia(w)));
        }
        csv.write_record(&row).map_err(runtime)?;
        last = w;
    }
    let bytes = csv.into_inner().map_err(|e| runtime(anyhow!("{e}")))?;
    let path = ctx.path(&format!("schedule_{kind_name}.csv"));
    write_atomic(&path, &bytes)?;
    println!(
        "{kind_name}: {} rows, w({t_max}) = {}",
        t_max + 1,
        format_float(last)
    );
    Ok(())
}
