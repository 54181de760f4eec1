//! Particle swarm optimization over bounded decision vectors.
//!
//! Two variants share one driver:
//!
//! * `Standard`: uniform random initialization, fixed inertia at the midpoint
//!   of `[omega_min, omega_max]` and `c1 = c2 = 2`.
//! * `Improved`: Logistic-chaos initialization through the carrier
//!   transform, cosine-decayed inertia, sine-scheduled learning factors and
//!   Tent-chaos relocation of the worst quarter of the swarm whenever the
//!   global best stagnates.
//!
//! Every random draw comes from one seeded stream and is taken before any
//! fitness evaluation, so results do not depend on how many worker threads
//! evaluate the swarm.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chaos::{carrier_transform, perturb, split_seed, Bounds, ChaosConfig, LogisticMap, TentMap};
use crate::error::{Error, Result};
use crate::limits::violation;
use crate::planner::PlanningProblem;
use crate::poly353::{solve_coefficients, SegmentTimes};

/// Fitness assigned to decision vectors whose trajectories cannot be built.
pub const INFEASIBLE_FITNESS: f64 = f64::INFINITY;

const STANDARD_LEARNING_FACTOR: f64 = 2.0;
const STAGNATION_TOLERANCE: f64 = 1e-6;

// Stream indices for `split_seed`.
const LOGISTIC_STREAM: u64 = 0;
const TENT_STREAM: u64 = 1;
const SWARM_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Standard,
    Improved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub population: usize,
    pub max_iterations: usize,
    pub omega_max: f64,
    pub omega_min: f64,
    pub c11: f64,
    pub c21: f64,
    /// Largest per-iteration move as a fraction of each dimension's span.
    pub v_clamp_fraction: f64,
    pub penalty_coefficient: f64,
    /// Iterations without relative improvement before chaotic relocation.
    pub stagnation_window: usize,
    pub mu: f64,
    pub phi: f64,
    pub alpha: f64,
    pub seed: u64,
    pub variant: Variant,
    /// Worker threads for fitness evaluation; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        let chaos = ChaosConfig::default();
        Self {
            population: 30,
            max_iterations: 100,
            omega_max: 0.86,
            omega_min: 0.44,
            c11: 1.3,
            c21: 1.3,
            v_clamp_fraction: 0.2,
            penalty_coefficient: 1e3,
            stagnation_window: 10,
            mu: chaos.mu,
            phi: chaos.phi,
            alpha: chaos.alpha,
            seed: 0,
            variant: Variant::Improved,
            workers: None,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population < 2 {
            return fail(format!("population must be at least 2, got {}", self.population));
        }
        if self.max_iterations < 2 {
            return fail(format!("max_iterations must be at least 2, got {}", self.max_iterations));
        }
        if !(0.0 < self.omega_min && self.omega_min < self.omega_max && self.omega_max < 1.0) {
            return fail(format!(
                "need 0 < omega_min < omega_max < 1, got {} and {}",
                self.omega_min, self.omega_max
            ));
        }
        for (name, value) in [
            ("c11", self.c11),
            ("c21", self.c21),
            ("v_clamp_fraction", self.v_clamp_fraction),
            ("penalty_coefficient", self.penalty_coefficient),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return fail(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if self.stagnation_window == 0 {
            return fail("stagnation_window must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        self.chaos(0).validate()
    }

    /// Chaos parameters with the seed of one derived stream.
    pub fn chaos(&self, stream: u64) -> ChaosConfig {
        ChaosConfig {
            mu: self.mu,
            phi: self.phi,
            alpha: self.alpha,
            seed: split_seed(self.seed, stream),
        }
    }

    /// `(ω, c1, c2)` in effect at iteration `n` for this config's variant.
    pub fn coefficients(&self, n: usize) -> (f64, f64, f64) {
        match self.variant {
            Variant::Improved => {
                let (c1, c2) = learning_factors(n, self);
                (inertia_weight(n, self), c1, c2)
            }
            Variant::Standard => (
                0.5 * (self.omega_max + self.omega_min),
                STANDARD_LEARNING_FACTOR,
                STANDARD_LEARNING_FACTOR,
            ),
        }
    }
}

/// Cosine-decayed inertia: `omega_max` at `n = 1`, `omega_min` at `n = N`.
pub fn inertia_weight(n: usize, cfg: &SwarmConfig) -> f64 {
    let n_max = cfg.max_iterations as f64;
    let phase = (n as f64 - 1.0) * PI / (n_max - 1.0);
    cfg.omega_min + 0.5 * (cfg.omega_max - cfg.omega_min) * (1.0 + phase.cos())
}

/// Cognitive factor decays from `c11 + 1` to `c11` while the social factor
/// rises from `c21 − 1` to `c21`.
pub fn learning_factors(n: usize, cfg: &SwarmConfig) -> (f64, f64) {
    let s = (FRAC_PI_2 * (1.0 - n as f64 / cfg.max_iterations as f64)).sin();
    (cfg.c11 + s, cfg.c21 - s)
}

/// Minimized quantity: what a swarm evaluates at each position.
pub trait Objective: Sync {
    fn bounds(&self) -> &Bounds;
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// Total duration plus the penalized, normalized limit violation summed over
/// joints. Unbuildable trajectories score [`INFEASIBLE_FITNESS`].
pub fn fitness(times: &[f64], problem: &PlanningProblem, penalty_coefficient: f64) -> f64 {
    let Ok(times) = SegmentTimes::from_slice(times, problem.t_floor()) else {
        return INFEASIBLE_FITNESS;
    };
    let mut total_violation = 0.0;
    for joint in problem.joints() {
        match solve_coefficients(&joint.waypoints, &times, &joint.boundary) {
            Ok(traj) => total_violation += violation(&traj, &joint.limits),
            Err(_) => return INFEASIBLE_FITNESS,
        }
    }
    times.total() + penalty_coefficient * total_violation
}

/// A planning problem bound to a penalty coefficient.
#[derive(Debug, Clone, Copy)]
pub struct SegmentTimeObjective<'a> {
    pub problem: &'a PlanningProblem,
    pub penalty_coefficient: f64,
}

impl Objective for SegmentTimeObjective<'_> {
    fn bounds(&self) -> &Bounds {
        self.problem.bounds()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        fitness(x, self.problem, self.penalty_coefficient)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub gbest_fitness: f64,
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub perturbed: bool,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_fitness: f64,
    /// Iteration index of the most recent update (1 after initialization).
    pub iteration: usize,
    pub history: Vec<HistoryEntry>,
    /// Consecutive iterations without relative gbest improvement.
    pub stagnant_iterations: usize,
    rng: ChaCha8Rng,
    tent: TentMap,
}

impl SwarmState {
    /// The stream that supplies `r1`/`r2` draws: per particle, `D` values of
    /// `r1` followed by `D` values of `r2`.
    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn tent(&self) -> &TentMap {
        &self.tent
    }

    fn refresh_global_best(&mut self) -> bool {
        let mut improved = false;
        for p in &self.particles {
            if p.best_fitness < self.global_best_fitness {
                self.global_best_fitness = p.best_fitness;
                self.global_best_position.clone_from(&p.best_position);
                improved = true;
            }
        }
        improved
    }
}

fn evaluate_all<O: Objective + ?Sized>(objective: &O, positions: &[Vec<f64>]) -> Vec<f64> {
    positions.par_iter().map(|x| objective.evaluate(x)).collect()
}

/// Builds the initial swarm and records iteration 1.
pub fn init_swarm<O: Objective + ?Sized>(cfg: &SwarmConfig, objective: &O) -> Result<SwarmState> {
    cfg.validate()?;
    let bounds = objective.bounds();
    let dim = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(cfg.seed, SWARM_STREAM));

    let positions: Vec<Vec<f64>> = match cfg.variant {
        Variant::Improved => {
            let mut logistic = LogisticMap::seeded(&cfg.chaos(LOGISTIC_STREAM), dim);
            logistic
                .take_rows(cfg.population)?
                .into_iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(d, &ch)| carrier_transform(ch, bounds.min(d), bounds.max(d)))
                        .collect()
                })
                .collect()
        }
        Variant::Standard => (0..cfg.population)
            .map(|_| {
                (0..dim)
                    .map(|d| bounds.min(d) + bounds.span(d) * rng.random::<f64>())
                    .collect()
            })
            .collect(),
    };
    let fitnesses = evaluate_all(objective, &positions);

    let particles: Vec<Particle> = positions
        .into_iter()
        .zip(fitnesses)
        .map(|(position, fitness)| Particle {
            velocity: vec![0.0; dim],
            best_position: position.clone(),
            best_fitness: fitness,
            position,
            fitness,
        })
        .collect();

    let mut state = SwarmState {
        global_best_position: particles[0].best_position.clone(),
        global_best_fitness: particles[0].best_fitness,
        particles,
        iteration: 1,
        history: Vec::with_capacity(cfg.max_iterations),
        stagnant_iterations: 0,
        rng,
        tent: TentMap::seeded(&cfg.chaos(TENT_STREAM), dim),
    };
    state.refresh_global_best();
    let (omega, c1, c2) = cfg.coefficients(1);
    state.history.push(HistoryEntry {
        iteration: 1,
        gbest_fitness: state.global_best_fitness,
        omega,
        c1,
        c2,
        perturbed: false,
    });
    Ok(state)
}

/// One velocity/position update of every particle, followed by best
/// bookkeeping. Coefficients are those of the new iteration index.
pub fn step<O: Objective + ?Sized>(state: &mut SwarmState, cfg: &SwarmConfig, objective: &O) {
    let bounds = objective.bounds();
    let dim = bounds.dim();
    let n = state.iteration + 1;
    let (omega, c1, c2) = cfg.coefficients(n);

    for p in &mut state.particles {
        let r1: Vec<f64> = (0..dim).map(|_| state.rng.random()).collect();
        let r2: Vec<f64> = (0..dim).map(|_| state.rng.random()).collect();
        for d in 0..dim {
            let v_limit = cfg.v_clamp_fraction * bounds.span(d);
            let v = omega * p.velocity[d]
                + c1 * r1[d] * (p.best_position[d] - p.position[d])
                + c2 * r2[d] * (state.global_best_position[d] - p.position[d]);
            p.velocity[d] = v.clamp(-v_limit, v_limit);
            p.position[d] = bounds.clamp(d, p.position[d] + p.velocity[d]);
        }
    }

    let positions: Vec<Vec<f64>> = state.particles.iter().map(|p| p.position.clone()).collect();
    let fitnesses = evaluate_all(objective, &positions);
    for (p, f) in state.particles.iter_mut().zip(fitnesses) {
        p.fitness = f;
        if f < p.best_fitness {
            p.best_fitness = f;
            p.best_position.clone_from(&p.position);
        }
    }

    let previous = state.global_best_fitness;
    state.refresh_global_best();
    if relative_improvement(previous, state.global_best_fitness) < STAGNATION_TOLERANCE {
        state.stagnant_iterations += 1;
    } else {
        state.stagnant_iterations = 0;
    }

    state.iteration = n;
    state.history.push(HistoryEntry {
        iteration: n,
        gbest_fitness: state.global_best_fitness,
        omega,
        c1,
        c2,
        perturbed: false,
    });
}

fn relative_improvement(previous: f64, current: f64) -> f64 {
    if previous == current {
        return 0.0;
    }
    if !previous.is_finite() {
        return if current.is_finite() { f64::INFINITY } else { 0.0 };
    }
    (previous - current) / previous.abs().max(f64::MIN_POSITIVE)
}

/// Relocates the worst `⌈m/4⌉` particles around the global best with Tent
/// chaos once the swarm has stagnated for `stagnation_window` iterations.
/// Returns whether relocation happened. No-op for the standard variant.
pub fn maybe_perturb<O: Objective + ?Sized>(
    state: &mut SwarmState,
    cfg: &SwarmConfig,
    objective: &O,
) -> Result<bool> {
    if cfg.variant != Variant::Improved || state.stagnant_iterations < cfg.stagnation_window {
        return Ok(false);
    }
    let bounds = objective.bounds();
    let count = state.particles.len().div_ceil(4);

    let mut order: Vec<usize> = (0..state.particles.len()).collect();
    order.sort_by(|&a, &b| {
        state.particles[b]
            .fitness
            .total_cmp(&state.particles[a].fitness)
            .then(a.cmp(&b))
    });
    order.truncate(count);

    let chaos = cfg.chaos(TENT_STREAM);
    let mut relocated = Vec::with_capacity(count);
    for _ in 0..count {
        let th = match state.tent.next_row() {
            Ok(row) => row,
            Err(_) => {
                // The chain collapsed onto 0 or 1; restart it from the swarm stream.
                let reseed = ChaosConfig {
                    seed: state.rng.random(),
                    ..chaos
                };
                state.tent = TentMap::seeded(&reseed, bounds.dim());
                state.tent.next_row()?
            }
        };
        relocated.push(perturb(&state.global_best_position, &th, &chaos, bounds)?);
    }
    let fitnesses = evaluate_all(objective, &relocated);

    for ((idx, position), f) in order.into_iter().zip(relocated).zip(fitnesses) {
        let p = &mut state.particles[idx];
        p.position = position;
        p.velocity.iter_mut().for_each(|v| *v = 0.0);
        p.fitness = f;
        if f < p.best_fitness {
            p.best_fitness = f;
            p.best_position.clone_from(&p.position);
        }
    }
    state.refresh_global_best();
    state.stagnant_iterations = 0;
    if let Some(last) = state.history.last_mut() {
        last.perturbed = true;
        last.gbest_fitness = state.global_best_fitness;
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<HistoryEntry>,
}

impl RunResult {
    pub fn iterations_to_within(&self, relative: f64) -> usize {
        iterations_to_within(&self.history, relative)
    }
}

/// Full optimization: initialization then `N − 1` update iterations.
pub fn run<O: Objective + ?Sized>(cfg: &SwarmConfig, objective: &O) -> Result<RunResult> {
    cfg.validate()?;
    let drive = || -> Result<RunResult> {
        let mut state = init_swarm(cfg, objective)?;
        while state.iteration < cfg.max_iterations {
            step(&mut state, cfg, objective);
            maybe_perturb(&mut state, cfg, objective)?;
        }
        if !state.global_best_fitness.is_finite() {
            return Err(Error::NoFeasibleSolution);
        }
        Ok(RunResult {
            best_position: state.global_best_position,
            best_fitness: state.global_best_fitness,
            history: state.history,
        })
    };
    match cfg.workers {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(drive),
        None => drive(),
    }
}

/// First iteration whose global best is within `relative` of the final one.
pub fn iterations_to_within(history: &[HistoryEntry], relative: f64) -> usize {
    let Some(last) = history.last() else {
        return 0;
    };
    let target = last.gbest_fitness + relative * last.gbest_fitness.abs();
    history
        .iter()
        .find(|h| h.gbest_fitness <= target)
        .map_or(last.iteration, |h| h.iteration)
}
