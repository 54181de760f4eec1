//! Per-joint kinematic limits and normalized constraint violation.

use crate::error::{Error, Result};
use crate::poly353::JointTrajectory353;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicLimits {
    v_max: f64,
    a_max: f64,
}

impl KinematicLimits {
    pub fn new(v_max: f64, a_max: f64) -> Result<Self> {
        for (name, value) in [("v_max", v_max), ("a_max", a_max)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidLimits(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(Self { v_max, a_max })
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }
}

/// Relative excess of the trajectory's peak speed and acceleration over the
/// limits. Zero iff the trajectory is feasible.
pub fn violation(traj: &JointTrajectory353, lim: &KinematicLimits) -> f64 {
    let ext = traj.derivative_extrema();
    let dv = (ext.max_abs_velocity - lim.v_max).max(0.0) / lim.v_max;
    let da = (ext.max_abs_acceleration - lim.a_max).max(0.0) / lim.a_max;
    dv + da
}
