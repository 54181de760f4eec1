//! Cubic–quintic–cubic ("3-5-3") piecewise polynomial trajectory for a single
//! joint through four knots.
//!
//! Each segment is a polynomial in its own local time `τ ∈ [0, t_i]`, with
//! coefficients stored in ascending powers. The 14 coefficients are fixed by
//! six knot positions, C¹/C² continuity at the two junctions and the four
//! start/end velocity and acceleration conditions.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::roots::{derivative, horner, real_roots_in};

/// Smallest admissible segment duration unless configured otherwise.
pub const DEFAULT_T_FLOOR: f64 = 1e-3;

const RESIDUAL_TOL: f64 = 1e-9;
const EVAL_SLACK: f64 = 1e-12;
const FALLBACK_SAMPLES: usize = 10_000;

type System = SMatrix<f64, 14, 14>;
type Vector14 = SVector<f64, 14>;

/// Start, two via points and end position of one joint (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointWaypoints {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl JointWaypoints {
    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Result<Self> {
        let wp = Self { q0, q1, q2, q3 };
        wp.validate()?;
        Ok(wp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|q| q.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("waypoint"))
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            q0: self.q0 * s,
            q1: self.q1 * s,
            q2: self.q2 * s,
            q3: self.q3 * s,
        }
    }
}

impl From<[f64; 4]> for JointWaypoints {
    fn from(q: [f64; 4]) -> Self {
        Self {
            q0: q[0],
            q1: q[1],
            q2: q[2],
            q3: q[3],
        }
    }
}

/// Velocity and acceleration at the trajectory start and end. Defaults to
/// rest-to-rest.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryConditions {
    pub v_start: f64,
    pub a_start: f64,
    pub v_end: f64,
    pub a_end: f64,
}

impl BoundaryConditions {
    pub fn rest() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_start, self.a_start, self.v_end, self.a_end];
        if all.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("boundary condition"))
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            v_start: self.v_start * s,
            a_start: self.a_start * s,
            v_end: self.v_end * s,
            a_end: self.a_end * s,
        }
    }
}

/// Durations of the cubic, quintic and cubic segments (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTimes {
    t: [f64; 3],
}

impl SegmentTimes {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        Self::with_floor(t1, t2, t3, DEFAULT_T_FLOOR)
    }

    pub fn with_floor(t1: f64, t2: f64, t3: f64, floor: f64) -> Result<Self> {
        let t = [t1, t2, t3];
        for &value in &t {
            if !value.is_finite() {
                return Err(Error::NonFinite("segment time"));
            }
            if value < floor || value <= 0.0 {
                return Err(Error::InvalidTimes { value, floor });
            }
        }
        Ok(Self { t })
    }

    pub fn from_slice(t: &[f64], floor: f64) -> Result<Self> {
        match t {
            [t1, t2, t3] => Self::with_floor(*t1, *t2, *t3, floor),
            _ => Err(Error::ShapeMismatch(format!(
                "expected 3 segment times, got {}",
                t.len()
            ))),
        }
    }

    pub fn t1(&self) -> f64 {
        self.t[0]
    }

    pub fn t2(&self) -> f64 {
        self.t[1]
    }

    pub fn t3(&self) -> f64 {
        self.t[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.t
    }

    pub fn total(&self) -> f64 {
        self.t[0] + self.t[1] + self.t[2]
    }
}

/// Position, velocity and acceleration at absolute time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: f64,
    pub v: f64,
    pub a: f64,
}

/// Peak absolute velocity and acceleration over a whole trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeExtrema {
    pub max_abs_velocity: f64,
    pub max_abs_acceleration: f64,
    /// Set when root finding was abandoned for dense sampling.
    pub reduced_accuracy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    First,
    Middle,
    Last,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory353 {
    seg1: [f64; 4],
    seg2: [f64; 6],
    seg3: [f64; 4],
    times: SegmentTimes,
    residual: f64,
}

/// Powers `[1, t, t², t³, t⁴, t⁵]`.
fn powers(t: f64) -> [f64; 6] {
    let mut p = [1.0; 6];
    for k in 1..6 {
        p[k] = p[k - 1] * t;
    }
    p
}

/// Row entries of the k-th derivative (k ≤ 2) of a degree `n` polynomial at `t`.
fn derivative_row(n: usize, k: usize, t: f64) -> [f64; 6] {
    let p = powers(t);
    let mut row = [0.0; 6];
    for j in k..=n {
        let falling = (0..k).fold(1.0, |acc, i| acc * (j - i) as f64);
        row[j] = falling * p[j - k];
    }
    row
}

/// Assembles `A x = b` for the coefficient vector
/// `[seg1 (4) | seg2 (6) | seg3 (4)]`.
pub fn assemble_system(
    wp: &JointWaypoints,
    times: &SegmentTimes,
    bc: &BoundaryConditions,
) -> (System, Vector14) {
    const OFF: [usize; 3] = [0, 4, 10];
    const DEG: [usize; 3] = [3, 5, 3];
    let mut a = System::zeros();
    let mut b = Vector14::zeros();
    let mut row = 0;

    let put = |a: &mut System, row: usize, seg: usize, k: usize, t: f64, sign: f64| {
        let entries = derivative_row(DEG[seg], k, t);
        for j in 0..=DEG[seg] {
            a[(row, OFF[seg] + j)] += sign * entries[j];
        }
    };

    let [t1, t2, t3] = times.as_array();

    // Start boundary.
    for (k, value) in [(0, wp.q0), (1, bc.v_start), (2, bc.a_start)] {
        put(&mut a, row, 0, k, 0.0, 1.0);
        b[row] = value;
        row += 1;
    }
    // Junctions: end of segment `seg` at `t_end` meets start of `seg + 1`.
    for (seg, t_end, q_knot) in [(0, t1, wp.q1), (1, t2, wp.q2)] {
        put(&mut a, row, seg, 0, t_end, 1.0);
        b[row] = q_knot;
        row += 1;
        put(&mut a, row, seg + 1, 0, 0.0, 1.0);
        b[row] = q_knot;
        row += 1;
        for k in 1..=2 {
            put(&mut a, row, seg, k, t_end, 1.0);
            put(&mut a, row, seg + 1, k, 0.0, -1.0);
            row += 1;
        }
    }
    // End boundary.
    for (k, value) in [(0, wp.q3), (1, bc.v_end), (2, bc.a_end)] {
        put(&mut a, row, 2, k, t3, 1.0);
        b[row] = value;
        row += 1;
    }
    debug_assert_eq!(row, 14);
    (a, b)
}

/// Solves for the unique 3-5-3 trajectory through `wp` with segment
/// durations `times` and boundary conditions `bc`.
pub fn solve_coefficients(
    wp: &JointWaypoints,
    times: &SegmentTimes,
    bc: &BoundaryConditions,
) -> Result<JointTrajectory353> {
    wp.validate()?;
    bc.validate()?;
    let (a, b) = assemble_system(wp, times, bc);
    let lu = a.lu();
    let mut x = lu
        .solve(&b)
        .ok_or(Error::SingularSystem { residual: f64::INFINITY })?;
    // One round of iterative refinement.
    let r = b - a * x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }

    let b_norm = b.amax().max(1.0);
    let residual = (b - a * x).amax();
    if !residual.is_finite() || residual > RESIDUAL_TOL * b_norm || x.iter().any(|v| !v.is_finite())
    {
        return Err(Error::SingularSystem { residual });
    }

    let mut seg1 = [0.0; 4];
    let mut seg2 = [0.0; 6];
    let mut seg3 = [0.0; 4];
    seg1.copy_from_slice(&x.as_slice()[0..4]);
    seg2.copy_from_slice(&x.as_slice()[4..10]);
    seg3.copy_from_slice(&x.as_slice()[10..14]);
    Ok(JointTrajectory353 {
        seg1,
        seg2,
        seg3,
        times: *times,
        residual,
    })
}

impl JointTrajectory353 {
    pub fn times(&self) -> &SegmentTimes {
        &self.times
    }

    pub fn duration(&self) -> f64 {
        self.times.total()
    }

    /// `‖Ax − b‖∞` of the solved system.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn coefficients(&self, segment: Segment) -> &[f64] {
        match segment {
            Segment::First => &self.seg1,
            Segment::Middle => &self.seg2,
            Segment::Last => &self.seg3,
        }
    }

    pub fn segment_duration(&self, segment: Segment) -> f64 {
        match segment {
            Segment::First => self.times.t1(),
            Segment::Middle => self.times.t2(),
            Segment::Last => self.times.t3(),
        }
    }

    /// Absolute start time of a segment.
    pub fn segment_start(&self, segment: Segment) -> f64 {
        match segment {
            Segment::First => 0.0,
            Segment::Middle => self.times.t1(),
            Segment::Last => self.times.t1() + self.times.t2(),
        }
    }

    /// `(q, v, a)` of one segment at local time `tau`, without range checks.
    pub fn evaluate_local(&self, segment: Segment, tau: f64) -> (f64, f64, f64) {
        let c = self.coefficients(segment);
        // Horner for the polynomial and its first two derivatives at once.
        let (mut q, mut v, mut a) = (0.0, 0.0, 0.0);
        for &ck in c.iter().rev() {
            a = a * tau + 2.0 * v;
            v = v * tau + q;
            q = q * tau + ck;
        }
        (q, v, a)
    }

    /// Samples the trajectory at absolute time `t`.
    pub fn evaluate(&self, t: f64) -> Result<TrajectorySample> {
        let total = self.duration();
        if !t.is_finite() || t < -EVAL_SLACK || t > total + EVAL_SLACK {
            return Err(Error::OutOfRange { t, total });
        }
        let t = t.clamp(0.0, total);
        let segment = if t <= self.times.t1() {
            Segment::First
        } else if t <= self.times.t1() + self.times.t2() {
            Segment::Middle
        } else {
            Segment::Last
        };
        let tau = (t - self.segment_start(segment)).clamp(0.0, self.segment_duration(segment));
        let (q, v, a) = self.evaluate_local(segment, tau);
        Ok(TrajectorySample { t, q, v, a })
    }

    /// Exact peak `|v|` and `|a|`: each segment is checked at its endpoints
    /// and at interior roots of the next-higher derivative.
    pub fn derivative_extrema(&self) -> DerivativeExtrema {
        let mut out = DerivativeExtrema {
            max_abs_velocity: 0.0,
            max_abs_acceleration: 0.0,
            reduced_accuracy: false,
        };
        for segment in [Segment::First, Segment::Middle, Segment::Last] {
            let duration = self.segment_duration(segment);
            let vel = derivative(self.coefficients(segment));
            let acc = derivative(&vel);
            let jerk = derivative(&acc);

            let (v_peak, a_peak) = match (
                real_roots_in(&acc, 0.0, duration),
                real_roots_in(&jerk, 0.0, duration),
            ) {
                (Some(v_roots), Some(a_roots)) => (
                    peak_abs(&vel, duration, &v_roots),
                    peak_abs(&acc, duration, &a_roots),
                ),
                _ => {
                    out.reduced_accuracy = true;
                    (
                        sampled_peak_abs(&vel, duration),
                        sampled_peak_abs(&acc, duration),
                    )
                }
            };
            out.max_abs_velocity = out.max_abs_velocity.max(v_peak);
            out.max_abs_acceleration = out.max_abs_acceleration.max(a_peak);
        }
        out
    }
}

fn peak_abs(poly: &[f64], duration: f64, interior: &[f64]) -> f64 {
    [0.0, duration]
        .iter()
        .chain(interior)
        .map(|&t| horner(poly, t).abs())
        .fold(0.0, f64::max)
}

fn sampled_peak_abs(poly: &[f64], duration: f64) -> f64 {
    (0..=FALLBACK_SAMPLES)
        .map(|i| horner(poly, duration * i as f64 / FALLBACK_SAMPLES as f64).abs())
        .fold(0.0, f64::max)
}
