//! Time-optimal joint trajectory planning with 3-5-3 piecewise polynomials
//! and a chaos-enhanced particle swarm optimizer, plus a few closed-form
//! reference kernels (ECA sizing, weighted fusion, focal loss).

pub mod chaos;
pub mod error;
pub mod kernels;
pub mod limits;
pub mod planner;
pub mod poly353;
pub mod pso;
mod roots;

pub use chaos::{Bounds, ChaosConfig};
pub use error::{Error, Result};
pub use limits::{violation, KinematicLimits};
pub use planner::{
    plan, reference_instance, sample, JointSpec, PlanOutcome, PlanningProblem, SyncMode,
    SynchronizedTrajectory,
};
pub use poly353::{
    solve_coefficients, BoundaryConditions, DerivativeExtrema, JointTrajectory353, JointWaypoints,
    SegmentTimes, TrajectorySample,
};
pub use pso::{HistoryEntry, RunResult, SwarmConfig, Variant};
