//! Planar two-link arm in the sagittal plane.
//!
//! Frame: origin at the shoulder, `x` forward, `z` up. The shoulder angle is
//! measured from the downward vertical (0 = arm hanging), positive forward;
//! the elbow angle is the relative forearm rotation, 0 at full extension and
//! positive in flexion. Both rotate about the lateral axis, so a direction at
//! absolute angle `phi` is `(sin phi, -cos phi)`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point2 = Vector2<f64>;

/// Numerical reach tolerance used by the inverse kinematics.
pub const REACH_EPS: f64 = 1e-9;
/// Minimum clearance between a trajectory endpoint and the workspace boundary.
pub const ENDPOINT_MARGIN: f64 = 1e-3;
/// Elbow angles closer than this to full extension are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-6;
/// Allowed overshoot past straight arm before a posture counts as hyperextended.
pub const HYPEREXTENSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowBranch {
    /// Elbow below the shoulder-hand chord (elbow flexed, `theta_e >= 0`).
    #[default]
    ElbowDown,
    /// Elbow above the chord (`theta_e <= 0`).
    ElbowUp,
}

impl ElbowBranch {
    fn sign(self) -> f64 {
        match self {
            ElbowBranch::ElbowDown => 1.0,
            ElbowBranch::ElbowUp => -1.0,
        }
    }

    /// Whether `theta_e` lies on this branch's side of full extension.
    pub fn admits(self, theta_e: f64) -> bool {
        self.sign() * theta_e >= -HYPEREXTENSION_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmGeometry {
    upper_arm_length: f64,
    forearm_hand_length: f64,
    branch: ElbowBranch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPoints {
    pub elbow: Point2,
    pub hand: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub theta_s: f64,
    pub theta_e: f64,
    /// Set when the arm is within [`SINGULAR_TOL`] of full extension.
    pub near_singular: bool,
}

/// Joint angles, rates and accelerations at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub t: f64,
    pub theta_s: f64,
    pub theta_e: f64,
    pub dtheta_s: f64,
    pub dtheta_e: f64,
    pub ddtheta_s: f64,
    pub ddtheta_e: f64,
}

impl JointState {
    pub fn at_rest(t: f64, theta_s: f64, theta_e: f64) -> Self {
        JointState {
            t,
            theta_s,
            theta_e,
            ..Default::default()
        }
    }

    pub fn angles(&self) -> Vector2<f64> {
        Vector2::new(self.theta_s, self.theta_e)
    }

    pub fn rates(&self) -> Vector2<f64> {
        Vector2::new(self.dtheta_s, self.dtheta_e)
    }

    pub fn accelerations(&self) -> Vector2<f64> {
        Vector2::new(self.ddtheta_s, self.ddtheta_e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub position: Point2,
    pub velocity: Vector2<f64>,
    pub acceleration: Vector2<f64>,
}

impl ArmGeometry {
    pub fn new(upper_arm_length: f64, forearm_hand_length: f64) -> Result<Self> {
        for (name, v) in [
            ("upper_arm_length", upper_arm_length),
            ("forearm_hand_length", forearm_hand_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(ArmGeometry {
            upper_arm_length,
            forearm_hand_length,
            branch: ElbowBranch::default(),
        })
    }

    pub fn with_branch(mut self, branch: ElbowBranch) -> Self {
        self.branch = branch;
        self
    }

    pub fn upper_arm_length(&self) -> f64 {
        self.upper_arm_length
    }

    pub fn forearm_hand_length(&self) -> f64 {
        self.forearm_hand_length
    }

    pub fn branch(&self) -> ElbowBranch {
        self.branch
    }

    pub fn min_reach(&self) -> f64 {
        (self.upper_arm_length - self.forearm_hand_length).abs()
    }

    pub fn max_reach(&self) -> f64 {
        self.upper_arm_length + self.forearm_hand_length
    }

    /// True when `p` lies inside the annulus with at least `margin` clearance.
    pub fn is_reachable(&self, p: &Point2, margin: f64) -> bool {
        let r = p.norm();
        r >= self.min_reach() + margin && r <= self.max_reach() - margin
    }

    pub fn forward(&self, theta_s: f64, theta_e: f64) -> ArmPoints {
        let phi = theta_s + theta_e;
        let elbow = self.upper_arm_length * direction(theta_s);
        let hand = elbow + self.forearm_hand_length * direction(phi);
        ArmPoints { elbow, hand }
    }

    /// Closed-form inverse kinematics on the configured elbow branch.
    pub fn inverse(&self, p: &Point2) -> Result<IkSolution> {
        let (l1, l2) = (self.upper_arm_length, self.forearm_hand_length);
        let r2 = p.norm_squared();
        let r = r2.sqrt();
        let lo = self.min_reach() + REACH_EPS;
        let hi = self.max_reach() - REACH_EPS;
        if !r.is_finite() || r < lo || r > hi {
            return Err(Error::UnreachableTarget {
                x: p.x,
                z: p.y,
                min_reach: lo,
                max_reach: hi,
            });
        }
        let cos_e = ((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let theta_e = self.branch.sign() * cos_e.acos();
        // bearing of the target measured from the downward vertical
        let bearing = p.x.atan2(-p.y);
        let theta_s = bearing - (l2 * theta_e.sin()).atan2(l1 + l2 * theta_e.cos());
        Ok(IkSolution {
            theta_s,
            theta_e,
            near_singular: theta_e.abs() < SINGULAR_TOL,
        })
    }

    /// Hand Jacobian `d(hand)/d(theta_s, theta_e)`.
    pub fn jacobian(&self, theta_s: f64, theta_e: f64) -> Matrix2<f64> {
        let (l1, l2) = (self.upper_arm_length, self.forearm_hand_length);
        let phi = theta_s + theta_e;
        let (s1, c1) = theta_s.sin_cos();
        let (s12, c12) = phi.sin_cos();
        Matrix2::new(l1 * c1 + l2 * c12, l2 * c12, l1 * s1 + l2 * s12, l2 * s12)
    }

    /// Time derivative of the Jacobian along `(theta, dtheta)`.
    pub fn jacobian_rate(&self, state: &JointState) -> Matrix2<f64> {
        let (l1, l2) = (self.upper_arm_length, self.forearm_hand_length);
        let phi = state.theta_s + state.theta_e;
        let dphi = state.dtheta_s + state.dtheta_e;
        let (s1, c1) = state.theta_s.sin_cos();
        let (s12, c12) = phi.sin_cos();
        let ds = state.dtheta_s;
        Matrix2::new(
            -l1 * s1 * ds - l2 * s12 * dphi,
            -l2 * s12 * dphi,
            l1 * c1 * ds + l2 * c12 * dphi,
            l2 * c12 * dphi,
        )
    }
}

fn direction(angle_from_down: f64) -> Point2 {
    let (s, c) = angle_from_down.sin_cos();
    Point2::new(s, -c)
}

/// Rest-to-rest cubic blend `p(s) = 3s² − 2s³` and its first two
/// derivatives with respect to normalized time `s`.
pub fn cubic_blend(s: f64) -> (f64, f64, f64) {
    (
        3.0 * s * s - 2.0 * s * s * s,
        6.0 * s - 6.0 * s * s,
        6.0 - 12.0 * s,
    )
}

/// One straight-line hand motion between two rest points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryLeg {
    pub start: Point2,
    pub end: Point2,
    pub duration: f64,
}

impl TrajectoryLeg {
    pub fn new(start: Point2, end: Point2, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "leg duration must be positive, got {duration}"
            )));
        }
        if !(start.iter().chain(end.iter()).all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("leg endpoints must be finite".into()));
        }
        Ok(TrajectoryLeg { start, end, duration })
    }

    pub fn reversed(&self) -> Self {
        TrajectoryLeg {
            start: self.end,
            end: self.start,
            duration: self.duration,
        }
    }

    pub fn sample(&self, t: f64) -> Result<CartesianState> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration,
            });
        }
        let tf = self.duration;
        let (p, dp, ddp) = cubic_blend(t / tf);
        let delta = self.end - self.start;
        Ok(CartesianState {
            position: self.start + p * delta,
            velocity: (dp / tf) * delta,
            acceleration: (ddp / (tf * tf)) * delta,
        })
    }
}

/// Number of `dt` steps in `duration`, requiring the grid to land on the end.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} s does not divide {duration} s"
        )));
    }
    Ok(n as usize)
}

/// Samples a leg on a uniform grid and maps it to joint space.
///
/// Rates come from `J⁻¹ṗ`, accelerations from `J⁻¹(p̈ − J̇θ̇)` with the
/// analytic `J̇`.
pub fn joint_trajectory(geom: &ArmGeometry, leg: &TrajectoryLeg, dt: f64) -> Result<Vec<JointState>> {
    let n = step_count(leg.duration, dt)?;
    for end in [&leg.start, &leg.end] {
        if !geom.is_reachable(end, ENDPOINT_MARGIN) {
            return Err(Error::UnreachableTarget {
                x: end.x,
                z: end.y,
                min_reach: geom.min_reach() + ENDPOINT_MARGIN,
                max_reach: geom.max_reach() - ENDPOINT_MARGIN,
            });
        }
    }
    (0..=n)
        .map(|i| {
            let t = if i == n { leg.duration } else { i as f64 * dt };
            let cart = leg.sample(t)?;
            let ik = geom.inverse(&cart.position)?;
            if ik.near_singular {
                return Err(Error::SingularTrajectory { t });
            }
            let jac = geom.jacobian(ik.theta_s, ik.theta_e);
            let inv = jac.try_inverse().ok_or(Error::SingularTrajectory { t })?;
            let rates = inv * cart.velocity;
            let mut state = JointState {
                t,
                theta_s: ik.theta_s,
                theta_e: ik.theta_e,
                dtheta_s: rates.x,
                dtheta_e: rates.y,
                ..Default::default()
            };
            let acc = inv * (cart.acceleration - geom.jacobian_rate(&state) * rates);
            state.ddtheta_s = acc.x;
            state.ddtheta_e = acc.y;
            Ok(state)
        })
        .collect()
}
