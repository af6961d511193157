//! One particle in one dimension pulled towards fixed best experiences.
//!
//! Three variants of the velocity rule are available: the random weights
//! removed entirely (the pull uses the full acceleration weight towards the
//! weighted attractor), the random weights replaced by their mean 0.5, and
//! the ordinary stochastic rule. Trajectories are classified as cyclic,
//! quasi-cyclic, divergent or convergent, and [`stability_spectrum`] gives
//! the analytic eigenvalue picture of the non-random recurrences.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::format_float;
use crate::swarm::{SwarmRng, UniformSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabMode {
    /// Random weights removed: `v' = w v + (iw + sw) (p - x)`.
    Deterministic,
    /// Random weights replaced by 0.5.
    Average,
    /// Fresh uniform draws every step.
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    pub w: f64,
    pub iw: f64,
    pub sw: f64,
    pub mode: LabMode,
    #[serde(default)]
    pub pbest: f64,
    #[serde(default)]
    pub gbest: f64,
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    /// Draw the initial velocity uniformly from `[-spread, spread]` instead of
    /// using `v0` (stochastic mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmax: Option<f64>,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
}

pub const PRESETS: [&str; 5] = ["fig1", "fig2", "fig4", "fig5", "fig6"];

impl LabConfig {
    /// The particle starting at `x = 100` at rest, both bests at zero, no vmax.
    pub fn at_rest(mode: LabMode, w: f64, iw: f64, sw: f64, steps: usize) -> Self {
        LabConfig {
            w,
            iw,
            sw,
            mode,
            pbest: 0.0,
            gbest: 0.0,
            x0: 100.0,
            v0: 0.0,
            v0_spread: None,
            vmax: None,
            steps,
            seed: 0,
        }
    }

    /// Named single-particle setups; see [`PRESETS`].
    pub fn preset(name: &str) -> Result<Self> {
        let cfg = match name {
            "fig1" => LabConfig {
                v0_spread: Some(1.0),
                ..LabConfig::at_rest(LabMode::Stochastic, 1.0, 2.0, 2.0, 1000)
            },
            "fig2" => LabConfig::at_rest(LabMode::Deterministic, 1.0, 2.0, 2.0, 1000),
            "fig4" => LabConfig::at_rest(LabMode::Average, 1.0, 2.0, 2.0, 1000),
            "fig5" => LabConfig::at_rest(LabMode::Average, 1.0, 0.5, 0.5, 1000),
            "fig6" => LabConfig::at_rest(LabMode::Stochastic, 1.0, 0.5, 0.5, 1000),
            other => {
                return Err(Error::invalid(format!(
                    "unknown preset `{other}`; valid presets: {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        let values = [
            self.w, self.iw, self.sw, self.pbest, self.gbest, self.x0, self.v0,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lab parameters must be finite"));
        }
        if self.mode == LabMode::Deterministic && self.iw + self.sw == 0.0 {
            return Err(Error::invalid(
                "iw + sw must be positive to define the attractor",
            ));
        }
        if let Some(vmax) = self.vmax {
            if !(vmax > 0.0) {
                return Err(Error::invalid(format!("vmax must be positive, got {vmax}")));
            }
        }
        if let Some(spread) = self.v0_spread {
            if self.mode != LabMode::Stochastic {
                return Err(Error::invalid(
                    "a random initial velocity needs stochastic mode",
                ));
            }
            if !(spread >= 0.0 && spread.is_finite()) {
                return Err(Error::invalid("v0_spread must be non-negative"));
            }
        }
        Ok(())
    }

    /// The fixed point the particle is pulled towards.
    pub fn attractor(&self) -> f64 {
        attractor(self.iw, self.sw, self.pbest, self.gbest)
            .unwrap_or(0.5 * (self.pbest + self.gbest))
    }

    /// Acceleration weight seen by the linear recurrence (mean pull for the
    /// stochastic mode).
    pub fn effective_acceleration(&self) -> f64 {
        match self.mode {
            LabMode::Deterministic => self.iw + self.sw,
            LabMode::Average | LabMode::Stochastic => 0.5 * (self.iw + self.sw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: usize,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Cyclic,
    QuasiCyclic,
    Divergent,
    Convergent,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub classification: Classification,
    pub attractor: f64,
}

impl Trajectory {
    pub fn max_abs_x(&self) -> f64 {
        self.samples.iter().map(|s| s.x.abs()).fold(0.0, f64::max)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }
}

/// Thresholds used by [`classify_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierSettings {
    pub bound_factor: f64,
    pub period_max: usize,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings {
            bound_factor: 10.0,
            period_max: 64,
        }
    }
}

/// Weighted average of the two best experiences.
pub fn attractor(iw: f64, sw: f64, pbest: f64, gbest: f64) -> Result<f64> {
    let aw = iw + sw;
    if aw == 0.0 {
        return Err(Error::invalid("iw + sw must be non-zero"));
    }
    Ok((iw * pbest + sw * gbest) / aw)
}

pub fn run_lab(config: &LabConfig) -> Result<Trajectory> {
    run_lab_with(config, ClassifierSettings::default())
}

pub fn run_lab_with(config: &LabConfig, settings: ClassifierSettings) -> Result<Trajectory> {
    config.validate()?;
    let p = config.attractor();
    let aw = config.iw + config.sw;
    let mut rng = SwarmRng::seed_from(config.seed);

    let mut x = config.x0;
    let mut v = match config.v0_spread {
        Some(spread) => spread * (2.0 * rng.next_uniform() - 1.0),
        None => config.v0,
    };
    let mut samples = Vec::with_capacity(config.steps + 1);
    samples.push(Sample { t: 0, x, v });
    for t in 1..=config.steps {
        v = match config.mode {
            LabMode::Deterministic => config.w * v + aw * (p - x),
            LabMode::Average => {
                config.w * v
                    + 0.5 * config.iw * (config.pbest - x)
                    + 0.5 * config.sw * (config.gbest - x)
            }
            LabMode::Stochastic => {
                let u1 = rng.next_uniform();
                let u2 = rng.next_uniform();
                config.w * v
                    + config.iw * u1 * (config.pbest - x)
                    + config.sw * u2 * (config.gbest - x)
            }
        };
        if let Some(vmax) = config.vmax {
            v = v.clamp(-vmax, vmax);
        }
        x += v;
        samples.push(Sample { t, x, v });
    }
    let classification = if samples.len() >= MIN_SAMPLES {
        classify_trajectory(&samples, p, settings.bound_factor, settings.period_max)?
    } else {
        Classification::Undetermined
    };
    Ok(Trajectory {
        samples,
        classification,
        attractor: p,
    })
}

const MIN_SAMPLES: usize = 16;
const CYCLE_TOLERANCE: f64 = 1e-6;
const REST_TOLERANCE: f64 = 1e-9;

/// Labels a trajectory by comparing the spread of `|x - p|` across quarters
/// of the run and by searching the second half for an exact period.
///
/// - Divergent: non-finite values, a last-quarter spread above `bound_factor`
///   times the first-quarter spread, or quarter spreads that each grow by at
///   least `1 + 1/bound_factor` (catches the linear growth at the boundary
///   case `aw = 4`).
/// - Convergent: the final `|x - p|` and `|v|` are below `1e-9`.
/// - Cyclic: some period up to `period_max` repeats within `1e-6` relative.
/// - QuasiCyclic: bounded but aperiodic.
pub fn classify_trajectory(
    samples: &[Sample],
    p: f64,
    bound_factor: f64,
    period_max: usize,
) -> Result<Classification> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "classification needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if !(bound_factor > 1.0) {
        return Err(Error::invalid("bound_factor must exceed 1"));
    }
    if samples.iter().any(|s| !s.x.is_finite() || !s.v.is_finite()) {
        return Ok(Classification::Divergent);
    }

    let spread = |window: &[Sample]| window.iter().map(|s| (s.x - p).abs()).fold(0.0, f64::max);
    let q = n / 4;
    let quarters: Vec<f64> = (0..4)
        .map(|k| {
            let end = if k == 3 { n } else { (k + 1) * q };
            spread(&samples[k * q..end])
        })
        .collect();
    let (first, last) = (quarters[0], quarters[3]);

    let end = samples[n - 1];
    if (end.x - p).abs() < REST_TOLERANCE && end.v.abs() < REST_TOLERANCE {
        return Ok(Classification::Convergent);
    }
    if first == 0.0 {
        return Ok(Classification::Undetermined);
    }
    let growth = 1.0 + 1.0 / bound_factor;
    let steady_growth = quarters.windows(2).all(|pair| pair[1] >= growth * pair[0]);
    if last > bound_factor * first || steady_growth {
        return Ok(Classification::Divergent);
    }

    let tail = &samples[n / 2..];
    let scale = tail
        .iter()
        .map(|s| (s.x - p).abs().max(s.v.abs()))
        .fold(0.0, f64::max);
    let tol = CYCLE_TOLERANCE * scale;
    let repeats = |period: usize| {
        tail.iter()
            .zip(&tail[period..])
            .all(|(a, b)| (a.x - b.x).abs() <= tol && (a.v - b.v).abs() <= tol)
    };
    if (1..=period_max.min(tail.len() / 2)).any(repeats) {
        return Ok(Classification::Cyclic);
    }
    Ok(Classification::QuasiCyclic)
}

/// Eigenvalue magnitudes (larger first) of the linear map
/// `(v, x - p) -> (v', x' - p)` with `v' = w v - a (x - p)` and `x' = x + v'`.
///
/// The map has trace `1 + w - a` and determinant `w`; for `w = 1` both
/// eigenvalues lie on the unit circle exactly when `0 < a < 4`.
pub fn stability_spectrum(w: f64, aw_effective: f64) -> (f64, f64) {
    let trace = 1.0 + w - aw_effective;
    let det = w;
    let disc = trace * trace - 4.0 * det;
    let (a, b) = if disc < 0.0 {
        let m = det.abs().sqrt();
        (m, m)
    } else {
        let root = disc.sqrt();
        let q = -0.5 * (trace + trace.signum() * root);
        if q == 0.0 {
            (0.0, 0.0)
        } else {
            ((q).abs(), (det / q).abs())
        }
    };
    (a.max(b), a.min(b))
}

/// Writes `t, x, v` rows and a trailing `# classification: ...` comment.
pub fn write_trajectory_csv<W: Write>(trajectory: &Trajectory, out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["t", "x", "v"])?;
    for s in &trajectory.samples {
        csv.write_record([s.t.to_string(), format_float(s.x), format_float(s.v)])?;
    }
    csv.flush()?;
    let mut out = csv.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    writeln!(
        out,
        "# classification: {}",
        serde_json::to_value(trajectory.classification)?
            .as_str()
            .unwrap_or_default()
    )?;
    Ok(())
}

/// Per-run summary written next to the trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabSummary {
    pub config: LabConfig,
    pub attractor: f64,
    pub classification: Classification,
    pub max_abs_x: f64,
    pub final_x: f64,
    pub final_v: f64,
    pub effective_acceleration: f64,
    /// Eigenvalue magnitudes of the non-random recurrence (mean pull in
    /// stochastic mode).
    pub spectrum: (f64, f64),
}

impl LabSummary {
    pub fn new(config: &LabConfig, trajectory: &Trajectory) -> Self {
        let last = trajectory.samples[trajectory.samples.len() - 1];
        let a = config.effective_acceleration();
        LabSummary {
            config: config.clone(),
            attractor: trajectory.attractor,
            classification: trajectory.classification,
            max_abs_x: trajectory.max_abs_x(),
            final_x: last.x,
            final_v: last.v,
            effective_acceleration: a,
            spectrum: stability_spectrum(config.w, a),
        }
    }
}
