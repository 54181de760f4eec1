//! Multi-joint time-optimal planning: one set of segment times drives every
//! joint's 3-5-3 trajectory.

use std::f64::consts::PI;

use crate::chaos::{split_seed, Bounds};
use crate::error::{Error, Result};
use crate::limits::{violation, KinematicLimits};
use crate::poly353::{
    solve_coefficients, BoundaryConditions, JointTrajectory353, JointWaypoints, SegmentTimes,
    TrajectorySample, DEFAULT_T_FLOOR,
};
use crate::pso::{self, HistoryEntry, SegmentTimeObjective, SwarmConfig};

/// Seed stream offset for per-joint runs in [`SyncMode::PerJointMax`].
const PER_JOINT_STREAM: u64 = 100;
const REPAIR_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SyncMode {
    /// One optimization over all joints at once.
    #[default]
    Shared,
    /// Optimize each joint alone, then take the component-wise maximum.
    PerJointMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpec {
    pub waypoints: JointWaypoints,
    pub boundary: BoundaryConditions,
    pub limits: KinematicLimits,
}

impl JointSpec {
    pub fn rest_to_rest(waypoints: [f64; 4], limits: KinematicLimits) -> Self {
        Self {
            waypoints: waypoints.into(),
            boundary: BoundaryConditions::rest(),
            limits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningProblem {
    joints: Vec<JointSpec>,
    bounds: Bounds,
    t_floor: f64,
    sync_mode: SyncMode,
}

impl PlanningProblem {
    pub fn new(joints: Vec<JointSpec>, bounds: Bounds, sync_mode: SyncMode) -> Result<Self> {
        Self::with_floor(joints, bounds, sync_mode, DEFAULT_T_FLOOR)
    }

    pub fn with_floor(
        joints: Vec<JointSpec>,
        bounds: Bounds,
        sync_mode: SyncMode,
        t_floor: f64,
    ) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidConfig("planning problem needs at least one joint".into()));
        }
        if !(t_floor.is_finite() && t_floor > 0.0) {
            return Err(Error::InvalidConfig(format!("t_floor must be positive, got {t_floor}")));
        }
        if bounds.dim() != 3 {
            return Err(Error::InvalidBounds(format!(
                "segment-time bounds need 3 dimensions, got {}",
                bounds.dim()
            )));
        }
        for d in 0..3 {
            if bounds.min(d) < t_floor {
                return Err(Error::InvalidBounds(format!(
                    "lower bound {} is below the segment-time floor {t_floor}",
                    bounds.min(d)
                )));
            }
        }
        for joint in &joints {
            joint.waypoints.validate()?;
            joint.boundary.validate()?;
        }
        Ok(Self {
            joints,
            bounds,
            t_floor,
            sync_mode,
        })
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn t_floor(&self) -> f64 {
        self.t_floor
    }

    pub fn sync_mode(&self) -> SyncMode {
        self.sync_mode
    }

    pub fn with_sync_mode(mut self, sync_mode: SyncMode) -> Self {
        self.sync_mode = sync_mode;
        self
    }

    /// The same problem restricted to one joint.
    pub fn single_joint(&self, joint: usize) -> Self {
        Self {
            joints: vec![self.joints[joint]],
            ..self.clone()
        }
    }

    pub fn solve_all(&self, times: &SegmentTimes) -> Result<Vec<JointTrajectory353>> {
        self.joints
            .iter()
            .map(|j| solve_coefficients(&j.waypoints, times, &j.boundary))
            .collect()
    }

    /// Per-joint violations at `times`.
    pub fn violations(&self, times: &SegmentTimes) -> Result<Vec<f64>> {
        Ok(self
            .solve_all(times)?
            .iter()
            .zip(&self.joints)
            .map(|(traj, joint)| violation(traj, &joint.limits))
            .collect())
    }

    pub fn is_feasible(&self, times: &SegmentTimes) -> bool {
        self.violations(times)
            .is_ok_and(|v| v.iter().all(|&x| x == 0.0))
    }

    fn scaled_times(&self, times: &SegmentTimes, scale: f64) -> Result<SegmentTimes> {
        let t = times.as_array();
        SegmentTimes::with_floor(
            self.bounds.clamp(0, t[0] * scale),
            self.bounds.clamp(1, t[1] * scale),
            self.bounds.clamp(2, t[2] * scale),
            self.t_floor,
        )
    }

    /// Smallest uniform time stretch (within the bounds) that makes every
    /// joint feasible. Penalized optima often sit a hair outside the limits.
    pub fn stretch_to_feasible(&self, times: &SegmentTimes) -> Option<SegmentTimes> {
        if self.is_feasible(times) {
            return Some(*times);
        }
        let t = times.as_array();
        let max_scale = (0..3)
            .map(|d| self.bounds.max(d) / t[d])
            .fold(1.0, f64::max);
        let mut lo = 1.0;
        let mut step: f64 = 1e-9;
        let mut hi = loop {
            let candidate = (1.0 + step).min(max_scale);
            if self.is_feasible(&self.scaled_times(times, candidate).ok()?) {
                break candidate;
            }
            if candidate >= max_scale {
                return None;
            }
            lo = candidate;
            step *= 2.0;
        };
        for _ in 0..REPAIR_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.is_feasible(&self.scaled_times(times, mid).ok()?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.scaled_times(times, hi).ok()
    }
}

/// Feasible trajectories for every joint on one shared clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SynchronizedTrajectory {
    pub times: SegmentTimes,
    pub per_joint: Vec<JointTrajectory353>,
}

impl SynchronizedTrajectory {
    pub fn total_duration(&self) -> f64 {
        self.times.total()
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: SynchronizedTrajectory,
    /// Optimizer history per run: one for shared mode, one per joint otherwise.
    pub histories: Vec<Vec<HistoryEntry>>,
}

/// Optimizes segment times for `problem` and returns the synchronized,
/// limit-respecting trajectory.
pub fn plan(problem: &PlanningProblem, cfg: &SwarmConfig) -> Result<PlanOutcome> {
    cfg.validate()?;
    match problem.sync_mode {
        SyncMode::Shared => {
            let (times, history) = optimize(problem, cfg)?;
            let per_joint = problem.solve_all(&times)?;
            Ok(PlanOutcome {
                trajectory: SynchronizedTrajectory { times, per_joint },
                histories: vec![history],
            })
        }
        SyncMode::PerJointMax => {
            let mut synced = [0.0f64; 3];
            let mut histories = Vec::with_capacity(problem.joints.len());
            for j in 0..problem.joints.len() {
                let joint_cfg = SwarmConfig {
                    seed: split_seed(cfg.seed, PER_JOINT_STREAM + j as u64),
                    ..cfg.clone()
                };
                let (times, history) = optimize(&problem.single_joint(j), &joint_cfg)?;
                for (s, t) in synced.iter_mut().zip(times.as_array()) {
                    *s = s.max(t);
                }
                histories.push(history);
            }
            let times = SegmentTimes::with_floor(synced[0], synced[1], synced[2], problem.t_floor)?;
            let per_joint = problem.solve_all(&times)?;
            for (joint, (traj, spec)) in per_joint.iter().zip(&problem.joints).enumerate() {
                let v = violation(traj, &spec.limits);
                if v > 0.0 {
                    return Err(Error::InfeasibleAfterSync { joint, violation: v });
                }
            }
            Ok(PlanOutcome {
                trajectory: SynchronizedTrajectory { times, per_joint },
                histories,
            })
        }
    }
}

fn optimize(problem: &PlanningProblem, cfg: &SwarmConfig) -> Result<(SegmentTimes, Vec<HistoryEntry>)> {
    let objective = SegmentTimeObjective {
        problem,
        penalty_coefficient: cfg.penalty_coefficient,
    };
    let result = pso::run(cfg, &objective)?;
    let best = SegmentTimes::from_slice(&result.best_position, problem.t_floor)?;
    let times = problem
        .stretch_to_feasible(&best)
        .ok_or(Error::NoFeasibleSolution)?;
    Ok((times, result.history))
}

/// Samples every joint at `0, dt, 2dt, …` and always at the final time.
pub fn sample(traj: &SynchronizedTrajectory, dt: f64) -> Result<Vec<Vec<TrajectorySample>>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::DomainError(format!("dt must be positive, got {dt}")));
    }
    let total = traj.total_duration();
    let steps = sample_count(total, dt);
    let times: Vec<f64> = (0..steps)
        .map(|k| if k + 1 == steps { total } else { k as f64 * dt })
        .collect();
    traj.per_joint
        .iter()
        .map(|joint| times.iter().map(|&t| joint.evaluate(t)).collect())
        .collect()
}

/// `⌈T/dt⌉ + 1`, forgiving round-off when `T` is a multiple of `dt`.
pub fn sample_count(total: f64, dt: f64) -> usize {
    let ratio = total / dt;
    let nearest = ratio.round();
    let intervals = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    intervals as usize + 1
}

/// Waypoints of the bundled six-joint reference pick-and-place move (rad).
pub const REFERENCE_WAYPOINTS: [[f64; 4]; 6] = [
    [0.0, 0.6, 1.4, 2.0],
    [-1.5, -1.2, -0.9, -0.6],
    [1.2, 0.9, 0.4, 0.2],
    [-1.6, -1.3, -1.0, -1.4],
    [-1.57, -1.2, -0.8, -1.0],
    [0.0, 0.5, 1.0, 1.6],
];

/// Six joints, rest-to-rest, `v_max = π`, `a_max = 2π`, times in `[0.1, 6]` s.
pub fn reference_instance() -> PlanningProblem {
    let limits = KinematicLimits::new(PI, 2.0 * PI).expect("positive limits");
    let joints = REFERENCE_WAYPOINTS
        .iter()
        .map(|&wp| JointSpec::rest_to_rest(wp, limits))
        .collect();
    PlanningProblem::new(
        joints,
        Bounds::uniform(3, 0.1, 6.0).expect("valid bounds"),
        SyncMode::Shared,
    )
    .expect("valid reference instance")
}
