//! Inertial arm model, Lagrangian inverse dynamics and hand-load torques.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::capacity::Phase;
use crate::error::{Error, Result};
use crate::kinematics::{ArmGeometry, ElbowBranch, JointState};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Segment fractions of stature and body mass.
pub mod fractions {
    pub const UPPER_ARM_LENGTH: f64 = 0.186;
    pub const FOREARM_HAND_LENGTH: f64 = 0.254;
    pub const UPPER_ARM_MASS: f64 = 0.028;
    pub const FOREARM_HAND_MASS: f64 = 0.022;
    pub const UPPER_ARM_COM: f64 = 0.436;
    pub const FOREARM_HAND_COM: f64 = 0.682;
    pub const UPPER_ARM_GYRATION: f64 = 0.322;
    pub const FOREARM_HAND_GYRATION: f64 = 0.468;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentParams {
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    /// Distance of the center of mass from the proximal joint.
    #[serde(rename = "com_distance_m")]
    pub com_distance: f64,
    /// Moment of inertia about the center of mass, lateral axis.
    #[serde(rename = "inertia_com_kg_m2")]
    pub inertia_com: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
}

impl SegmentParams {
    fn from_fractions(length: f64, mass: f64, com: f64, gyration: f64) -> Self {
        let k = gyration * length;
        SegmentParams {
            mass,
            com_distance: com * length,
            inertia_com: mass * k * k,
            length,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let all_positive = [self.mass, self.com_distance, self.inertia_com, self.length]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err("segment parameters must be finite and strictly positive".into());
        }
        if self.com_distance > self.length {
            return Err(format!(
                "center of mass {} m lies beyond the segment length {} m",
                self.com_distance, self.length
            ));
        }
        Ok(())
    }

    /// Inertia about the proximal joint.
    fn inertia_proximal(&self) -> f64 {
        self.inertia_com + self.mass * self.com_distance * self.com_distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmInertialModel {
    pub upper_arm: SegmentParams,
    pub forearm_hand: SegmentParams,
    /// Point mass carried at the hand.
    pub tool_mass: f64,
    pub gravity: f64,
}

impl ArmInertialModel {
    pub fn new(upper_arm: SegmentParams, forearm_hand: SegmentParams, tool_mass: f64) -> Result<Self> {
        upper_arm
            .validate()
            .map_err(|m| Error::InvalidArgument(format!("upper arm: {m}")))?;
        forearm_hand
            .validate()
            .map_err(|m| Error::InvalidArgument(format!("forearm/hand: {m}")))?;
        if !(tool_mass.is_finite() && tool_mass >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tool mass must be non-negative, got {tool_mass}"
            )));
        }
        Ok(ArmInertialModel {
            upper_arm,
            forearm_hand,
            tool_mass,
            gravity: STANDARD_GRAVITY,
        })
    }

    /// Segment parameters from stature and body mass using fixed regression
    /// fractions (see [`fractions`]). No tool is attached.
    pub fn from_anthropometry(stature: f64, body_mass: f64) -> Result<Self> {
        if !(1.0..=2.5).contains(&stature) {
            return Err(Error::OutOfRangeAnthropometry(format!(
                "stature {stature} m outside [1.0, 2.5]"
            )));
        }
        if !(30.0..=200.0).contains(&body_mass) {
            return Err(Error::OutOfRangeAnthropometry(format!(
                "body mass {body_mass} kg outside [30, 200]"
            )));
        }
        use fractions::*;
        let upper_arm = SegmentParams::from_fractions(
            UPPER_ARM_LENGTH * stature,
            UPPER_ARM_MASS * body_mass,
            UPPER_ARM_COM,
            UPPER_ARM_GYRATION,
        );
        let forearm_hand = SegmentParams::from_fractions(
            FOREARM_HAND_LENGTH * stature,
            FOREARM_HAND_MASS * body_mass,
            FOREARM_HAND_COM,
            FOREARM_HAND_GYRATION,
        );
        ArmInertialModel::new(upper_arm, forearm_hand, 0.0)
    }

    pub fn with_tool_mass(mut self, tool_mass: f64) -> Self {
        self.tool_mass = tool_mass;
        self
    }

    pub fn with_gravity(mut self, gravity: f64) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn geometry(&self, branch: ElbowBranch) -> ArmGeometry {
        ArmGeometry::new(self.upper_arm.length, self.forearm_hand.length)
            .expect("segment lengths validated at construction")
            .with_branch(branch)
    }

    /// Distal body (forearm+hand with the tool) lumped as one rigid link:
    /// (mass, first moment about the elbow, inertia about the elbow).
    fn distal_link(&self) -> (f64, f64, f64) {
        let f = &self.forearm_hand;
        let mass = f.mass + self.tool_mass;
        let moment = f.mass * f.com_distance + self.tool_mass * f.length;
        let inertia = f.inertia_proximal() + self.tool_mass * f.length * f.length;
        (mass, moment, inertia)
    }

    pub fn mass_matrix(&self, theta_e: f64) -> Matrix2<f64> {
        let l1 = self.upper_arm.length;
        let i1 = self.upper_arm.inertia_proximal();
        let (m2, h2, i2) = self.distal_link();
        let coupling = h2 * l1 * theta_e.cos();
        let m11 = i1 + i2 + m2 * l1 * l1 + 2.0 * coupling;
        let m12 = i2 + coupling;
        Matrix2::new(m11, m12, m12, i2)
    }

    /// Coriolis/centrifugal matrix `C` with `Ṁ − 2C` skew-symmetric.
    pub fn coriolis_matrix(&self, state: &JointState) -> Matrix2<f64> {
        let (_, h2, _) = self.distal_link();
        let h = h2 * self.upper_arm.length * state.theta_e.sin();
        let (ds, de) = (state.dtheta_s, state.dtheta_e);
        Matrix2::new(-h * de, -h * (ds + de), h * ds, 0.0)
    }

    /// Gravity torques `∂U/∂θ`.
    pub fn gravity_torque(&self, theta_s: f64, theta_e: f64) -> Vector2<f64> {
        let u = &self.upper_arm;
        let (m2, h2, _) = self.distal_link();
        let g = self.gravity;
        let distal = g * h2 * (theta_s + theta_e).sin();
        Vector2::new(
            g * (u.mass * u.com_distance + m2 * u.length) * theta_s.sin() + distal,
            distal,
        )
    }

    /// Joint torques `M(θ)θ̈ + C(θ,θ̇)θ̇ + G(θ)` from the Lagrangian of the
    /// arm plus tool.
    pub fn inverse_dynamics(&self, state: &JointState) -> Vector2<f64> {
        self.mass_matrix(state.theta_e) * state.accelerations()
            + self.coriolis_matrix(state) * state.rates()
            + self.gravity_torque(state.theta_s, state.theta_e)
    }

    pub fn kinetic_energy(&self, state: &JointState) -> f64 {
        let rates = state.rates();
        0.5 * rates.dot(&(self.mass_matrix(state.theta_e) * rates))
    }

    /// Potential energy with the zero level at the shoulder height.
    pub fn potential_energy(&self, theta_s: f64, theta_e: f64) -> f64 {
        let u = &self.upper_arm;
        let (m2, h2, _) = self.distal_link();
        -self.gravity
            * ((u.mass * u.com_distance + m2 * u.length) * theta_s.cos() + h2 * (theta_s + theta_e).cos())
    }
}

/// Meaning of the task force magnitudes with respect to the hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceConvention {
    /// The task forces are exerted by the hand on the environment; the force
    /// acting on the hand is their reaction.
    #[default]
    ExertedByHand,
    /// The task forces are the forces acting on the hand.
    ReactionOnHand,
}

/// Horizontal hand forces of the two task phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    /// Push magnitude, directed forward (+x).
    pub push_force: f64,
    /// Pull magnitude, directed toward the body (−x).
    pub pull_force: f64,
}

impl LoadSpec {
    pub fn new(push_force: f64, pull_force: f64) -> Result<Self> {
        if !(push_force.is_finite() && push_force >= 0.0 && pull_force.is_finite() && pull_force >= 0.0) {
            return Err(Error::InvalidArgument(
                "force magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(LoadSpec {
            push_force,
            pull_force,
        })
    }

    /// Task force of a phase in the direction of the exertion.
    pub fn task_force(&self, phase: Phase) -> Vector2<f64> {
        match phase {
            Phase::Push => Vector2::new(self.push_force, 0.0),
            Phase::Pull => Vector2::new(-self.pull_force, 0.0),
        }
    }

    /// Force acting on the hand during `phase`.
    pub fn hand_force(&self, phase: Phase, convention: ForceConvention) -> Vector2<f64> {
        match convention {
            ForceConvention::ExertedByHand => -self.task_force(phase),
            ForceConvention::ReactionOnHand => self.task_force(phase),
        }
    }
}

/// `Jᵀ·F` for a force `F` acting on the hand.
///
/// With the default convention a forward push (hand force `−x` on the hand)
/// maps to a positive shoulder torque whenever the hand is above the
/// shoulder, and to elbow flexion torque for a flexed elbow.
pub fn external_joint_torque(
    geom: &ArmGeometry,
    theta_s: f64,
    theta_e: f64,
    hand_force: &Vector2<f64>,
) -> Vector2<f64> {
    geom.jacobian(theta_s, theta_e).transpose() * hand_force
}

/// Body torque plus hand-load torque.
pub fn total_joint_torque(
    model: &ArmInertialModel,
    geom: &ArmGeometry,
    state: &JointState,
    hand_force: &Vector2<f64>,
) -> Vector2<f64> {
    model.inverse_dynamics(state) + external_joint_torque(geom, state.theta_s, state.theta_e, hand_force)
}
