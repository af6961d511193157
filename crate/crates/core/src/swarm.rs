//! Global-best particle swarm engine.
//!
//! Random weights are drawn from a [`UniformSource`] in a fixed order:
//! particle index ascending, then coordinate ascending, then the
//! individuality draw before the sociality draw. Each velocity update
//! therefore consumes exactly `2 * dimension` draws, and two runs with the
//! same seed and configuration are bit-identical.
//!
//! The swarm's best experience is refreshed only after every particle has
//! moved and updated its own best (synchronous update), so the order in which
//! particles are processed within a step does not change the outcome.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::ObjectiveSpec;
use crate::error::{Error, Result};
use crate::format::format_float;
use crate::schedule::{ParameterSet, ResolvedParams, VelocityRule};

/// Supplier of `U(0,1)` random weights.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<T: UniformSource + ?Sized> UniformSource for &mut T {
    fn next_uniform(&mut self) -> f64 {
        (**self).next_uniform()
    }
}

/// Seeded generator owned by a swarm.
#[derive(Debug, Clone)]
pub struct SwarmRng(ChaCha8Rng);

impl SwarmRng {
    pub fn seed_from(seed: u64) -> Self {
        SwarmRng(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl UniformSource for SwarmRng {
    fn next_uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}

/// Always returns the same value; `ConstantSource(0.5)` gives the
/// average-behaviour particle.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSource(pub f64);

impl UniformSource for ConstantSource {
    fn next_uniform(&mut self) -> f64 {
        self.0
    }
}

/// Replays a fixed list of draws, panicking once it runs dry.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    draws: Vec<f64>,
    next: usize,
}

impl ReplaySource {
    pub fn new(draws: Vec<f64>) -> Self {
        ReplaySource { draws, next: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }
}

impl UniformSource for ReplaySource {
    fn next_uniform(&mut self) -> f64 {
        let u = *self.draws.get(self.next).expect("replay source exhausted");
        self.next += 1;
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "spread", rename_all = "snake_case")]
pub enum VelocityInit {
    #[default]
    Zero,
    /// Each component uniform in `[-c, c]`.
    UniformSymmetric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest_position: Vec<f64>,
    pub pbest_conflict: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_position: Vec<f64>,
    pub gbest_conflict: f64,
    /// Index of the particle whose best experience is the global best.
    pub gbest_index: usize,
    pub time_step: u64,
    rng: SwarmRng,
}

/// A group of consecutive particles sharing one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubSwarmSpec {
    pub parameter_set: ParameterSet,
    pub particle_count: usize,
}

/// Random positions in the search box, velocities per `velocity_init`.
pub fn initialize_swarm(
    spec: &ObjectiveSpec,
    n_particles: usize,
    seed: u64,
    velocity_init: VelocityInit,
) -> Result<SwarmState> {
    if n_particles == 0 {
        return Err(Error::invalid("a swarm needs at least one particle"));
    }
    spec.validate()?;
    if let VelocityInit::UniformSymmetric(c) = velocity_init {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "initial velocity spread must be a non-negative number, got {c}"
            )));
        }
    }
    let mut rng = SwarmRng::seed_from(seed);
    let dim = spec.dimension;
    let mut particles = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let position: Vec<f64> = (0..dim)
            .map(|_| spec.lower_bound + spec.range() * rng.next_uniform())
            .collect();
        let velocity: Vec<f64> = match velocity_init {
            VelocityInit::Zero => vec![0.0; dim],
            VelocityInit::UniformSymmetric(c) => (0..dim)
                .map(|_| c * (2.0 * rng.next_uniform() - 1.0))
                .collect(),
        };
        let conflict = spec.evaluate(&position)?;
        particles.push(Particle {
            pbest_position: position.clone(),
            position,
            velocity,
            pbest_conflict: conflict,
        });
    }
    let mut state = SwarmState {
        gbest_position: particles[0].pbest_position.clone(),
        gbest_conflict: particles[0].pbest_conflict,
        gbest_index: 0,
        particles,
        time_step: 0,
        rng,
    };
    state.synchronize_gbest();
    Ok(state)
}

/// `w v + iw U1 (pbest - x) + sw U2 (gbest - x)`, component-wise.
pub fn velocity_update(
    particle: &Particle,
    gbest_position: &[f64],
    w: f64,
    iw: f64,
    sw: f64,
    rng: &mut impl UniformSource,
) -> Vec<f64> {
    let mut v = particle.velocity.clone();
    update_velocity(
        &mut v,
        particle,
        gbest_position,
        VelocityRule::Inertia { w },
        iw,
        sw,
        rng,
    );
    v
}

/// `chi (v + iw U1 (pbest - x) + sw U2 (gbest - x))`, component-wise.
pub fn constricted_velocity_update(
    particle: &Particle,
    gbest_position: &[f64],
    chi: f64,
    iw: f64,
    sw: f64,
    rng: &mut impl UniformSource,
) -> Vec<f64> {
    let mut v = particle.velocity.clone();
    update_velocity(
        &mut v,
        particle,
        gbest_position,
        VelocityRule::Constricted { chi },
        iw,
        sw,
        rng,
    );
    v
}

fn update_velocity(
    v: &mut [f64],
    particle: &Particle,
    gbest: &[f64],
    rule: VelocityRule,
    iw: f64,
    sw: f64,
    rng: &mut impl UniformSource,
) {
    let coords = v
        .iter_mut()
        .zip(&particle.position)
        .zip(&particle.pbest_position)
        .zip(gbest);
    for (((vj, &xj), &pj), &gj) in coords {
        let u1 = rng.next_uniform();
        let u2 = rng.next_uniform();
        let pull = iw * u1 * (pj - xj) + sw * u2 * (gj - xj);
        *vj = match rule {
            VelocityRule::Inertia { w } => w * *vj + pull,
            VelocityRule::Constricted { chi } => chi * (*vj + pull),
        };
    }
}

/// Clips every component into `[-vmax, vmax]`.
pub fn clamp_velocity(v: &[f64], vmax: f64) -> Result<Vec<f64>> {
    check_vmax(vmax)?;
    let mut out = v.to_vec();
    clamp_in_place(&mut out, vmax);
    Ok(out)
}

fn check_vmax(vmax: f64) -> Result<()> {
    if vmax > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("vmax must be positive, got {vmax}")))
    }
}

fn clamp_in_place(v: &mut [f64], vmax: f64) {
    for vj in v {
        if *vj > vmax {
            *vj = vmax;
        } else if *vj < -vmax {
            *vj = -vmax;
        }
    }
}

/// Moves one particle: velocity update, optional clamp, position update,
/// evaluation, and a personal-best update on strict improvement.
pub fn advance_particle(
    particle: &mut Particle,
    gbest_position: &[f64],
    params: &ResolvedParams,
    spec: &ObjectiveSpec,
    rng: &mut impl UniformSource,
) -> Result<()> {
    let mut v = std::mem::take(&mut particle.velocity);
    update_velocity(
        &mut v,
        particle,
        gbest_position,
        params.rule,
        params.iw,
        params.sw,
        rng,
    );
    if let Some(vmax) = params.vmax {
        check_vmax(vmax)?;
        clamp_in_place(&mut v, vmax);
    }
    for (xj, vj) in particle.position.iter_mut().zip(&v) {
        *xj += vj;
    }
    particle.velocity = v;
    let conflict = spec.evaluate(&particle.position)?;
    if conflict < particle.pbest_conflict {
        particle.pbest_conflict = conflict;
        particle.pbest_position.clone_from(&particle.position);
    }
    Ok(())
}

impl SwarmState {
    pub fn dimension(&self) -> usize {
        self.gbest_position.len()
    }

    pub fn rng_mut(&mut self) -> &mut SwarmRng {
        &mut self.rng
    }

    /// Recomputes the global best from all personal bests; ties go to the
    /// lower particle index.
    pub fn synchronize_gbest(&mut self) {
        let (index, best) =
            self.particles
                .iter()
                .enumerate()
                .fold((0, &self.particles[0]), |(bi, b), (i, p)| {
                    if p.pbest_conflict < b.pbest_conflict {
                        (i, p)
                    } else {
                        (bi, b)
                    }
                });
        self.gbest_conflict = best.pbest_conflict;
        self.gbest_position.clone_from(&best.pbest_position);
        self.gbest_index = index;
    }

    /// One synchronous time-step of a homogeneous swarm.
    pub fn step(&mut self, spec: &ObjectiveSpec, params: &ParameterSet, t_max: u64) -> Result<()> {
        let mut rng = self.rng.clone();
        let result = self.step_with_source(spec, params, t_max, &mut rng);
        self.rng = rng;
        result
    }

    pub fn step_with_source(
        &mut self,
        spec: &ObjectiveSpec,
        params: &ParameterSet,
        t_max: u64,
        rng: &mut impl UniformSource,
    ) -> Result<()> {
        let t = self.time_step + 1;
        let resolved = params.resolve(t, t_max, spec.lower_bound, spec.upper_bound)?;
        let layout = [(self.particles.len(), resolved)];
        self.step_layout(spec, &layout, rng)
    }

    /// One synchronous time-step where consecutive groups of particles follow
    /// their own parameter sets but share the global best.
    pub fn step_multiswarm(
        &mut self,
        spec: &ObjectiveSpec,
        subswarms: &[SubSwarmSpec],
        t_max: u64,
    ) -> Result<()> {
        let mut rng = self.rng.clone();
        let result = self.step_multiswarm_with_source(spec, subswarms, t_max, &mut rng);
        self.rng = rng;
        result
    }

    pub fn step_multiswarm_with_source(
        &mut self,
        spec: &ObjectiveSpec,
        subswarms: &[SubSwarmSpec],
        t_max: u64,
        rng: &mut impl UniformSource,
    ) -> Result<()> {
        check_layout(subswarms, self.particles.len())?;
        let t = self.time_step + 1;
        let layout = subswarms
            .iter()
            .map(|s| {
                let r = s
                    .parameter_set
                    .resolve(t, t_max, spec.lower_bound, spec.upper_bound)?;
                Ok((s.particle_count, r))
            })
            .collect::<Result<Vec<_>>>()?;
        self.step_layout(spec, &layout, rng)
    }

    fn step_layout(
        &mut self,
        spec: &ObjectiveSpec,
        layout: &[(usize, ResolvedParams)],
        rng: &mut impl UniformSource,
    ) -> Result<()> {
        let gbest = &self.gbest_position;
        let mut particles = self.particles.iter_mut();
        for (count, params) in layout {
            for particle in particles.by_ref().take(*count) {
                advance_particle(particle, gbest, params, spec, rng)?;
            }
        }
        self.synchronize_gbest();
        self.time_step += 1;
        Ok(())
    }
}

/// Checks that sub-swarm sizes partition a swarm of `n_particles`.
pub fn check_layout(subswarms: &[SubSwarmSpec], n_particles: usize) -> Result<()> {
    if subswarms.is_empty() {
        return Err(Error::invalid("a multi-swarm needs at least one sub-swarm"));
    }
    if let Some(s) = subswarms.iter().find(|s| s.particle_count == 0) {
        return Err(Error::invalid(format!(
            "sub-swarm sizes must be positive, got {}",
            s.particle_count
        )));
    }
    let total: usize = subswarms.iter().map(|s| s.particle_count).sum();
    if total != n_particles {
        return Err(Error::invalid(format!(
            "sub-swarm sizes sum to {total}, swarm has {n_particles} particles"
        )));
    }
    for s in subswarms {
        s.parameter_set.validate()?;
    }
    Ok(())
}

/// Streams one CSV row per (time-step, particle):
/// `t, i, x_0..x_{d-1}, v_0..v_{d-1}, pbest_conflict, gbest_conflict`.
pub struct TrajectoryWriter<W: Write> {
    out: csv::Writer<W>,
    dimension: usize,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W, dimension: usize) -> Result<Self> {
        let mut out = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "i".to_string()];
        header.extend((0..dimension).map(|j| format!("x_{j}")));
        header.extend((0..dimension).map(|j| format!("v_{j}")));
        header.push("pbest_conflict".into());
        header.push("gbest_conflict".into());
        out.write_record(&header)?;
        Ok(TrajectoryWriter { out, dimension })
    }

    pub fn record(&mut self, state: &SwarmState) -> Result<()> {
        if state.dimension() != self.dimension {
            return Err(Error::invalid("trajectory dimension changed mid-run"));
        }
        for (i, p) in state.particles.iter().enumerate() {
            let mut row = Vec::with_capacity(2 * self.dimension + 4);
            row.push(state.time_step.to_string());
            row.push(i.to_string());
            row.extend(p.position.iter().map(|&x| format_float(x)));
            row.extend(p.velocity.iter().map(|&v| format_float(v)));
            row.push(format_float(p.pbest_conflict));
            row.push(format_float(state.gbest_conflict));
            self.out.write_record(&row)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}
