//! Posture-dependent maximal voluntary joint torque.
//!
//! Each (joint, movement) row is a polynomial in the shoulder and elbow
//! angles expressed in degrees, scaled by a gender gain. The kinematic angles
//! already use 0 for the straight hanging arm, so the conversion at this
//! boundary is a plain radians-to-degrees scaling.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Shoulder,
    Elbow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Movement {
    Flexion,
    Extension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    #[default]
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Push,
    Pull,
}

impl Phase {
    pub fn other(self) -> Phase {
        match self {
            Phase::Push => Phase::Pull,
            Phase::Pull => Phase::Push,
        }
    }

    pub fn movement(self, joint: Joint) -> Movement {
        match (self, joint) {
            (Phase::Push, Joint::Shoulder) | (Phase::Pull, Joint::Elbow) => Movement::Flexion,
            (Phase::Push, Joint::Elbow) | (Phase::Pull, Joint::Shoulder) => Movement::Extension,
        }
    }

    /// Active muscle groups, shoulder first.
    pub fn groups(self) -> PerJoint<MuscleGroup> {
        PerJoint::from_fn(|j| MuscleGroup::new(j, self.movement(j)))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Push => "push",
            Phase::Pull => "pull",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuscleGroup {
    ShoulderFlexor,
    ShoulderExtensor,
    ElbowFlexor,
    ElbowExtensor,
}

impl MuscleGroup {
    pub const ALL: [MuscleGroup; 4] = [
        MuscleGroup::ShoulderFlexor,
        MuscleGroup::ShoulderExtensor,
        MuscleGroup::ElbowFlexor,
        MuscleGroup::ElbowExtensor,
    ];

    pub fn new(joint: Joint, movement: Movement) -> Self {
        match (joint, movement) {
            (Joint::Shoulder, Movement::Flexion) => MuscleGroup::ShoulderFlexor,
            (Joint::Shoulder, Movement::Extension) => MuscleGroup::ShoulderExtensor,
            (Joint::Elbow, Movement::Flexion) => MuscleGroup::ElbowFlexor,
            (Joint::Elbow, Movement::Extension) => MuscleGroup::ElbowExtensor,
        }
    }

    pub fn joint(self) -> Joint {
        match self {
            MuscleGroup::ShoulderFlexor | MuscleGroup::ShoulderExtensor => Joint::Shoulder,
            MuscleGroup::ElbowFlexor | MuscleGroup::ElbowExtensor => Joint::Elbow,
        }
    }

    pub fn movement(self) -> Movement {
        match self {
            MuscleGroup::ShoulderFlexor | MuscleGroup::ElbowFlexor => Movement::Flexion,
            MuscleGroup::ShoulderExtensor | MuscleGroup::ElbowExtensor => Movement::Extension,
        }
    }

    /// Phase in which this group does the work.
    pub fn phase(self) -> Phase {
        match self {
            MuscleGroup::ShoulderFlexor | MuscleGroup::ElbowExtensor => Phase::Push,
            MuscleGroup::ShoulderExtensor | MuscleGroup::ElbowFlexor => Phase::Pull,
        }
    }

    /// Sign of the joint torque this group produces (flexion positive).
    pub fn action_sign(self) -> f64 {
        match self.movement() {
            Movement::Flexion => 1.0,
            Movement::Extension => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MuscleGroup::ShoulderFlexor => "shoulder_flexor",
            MuscleGroup::ShoulderExtensor => "shoulder_extensor",
            MuscleGroup::ElbowFlexor => "elbow_flexor",
            MuscleGroup::ElbowExtensor => "elbow_extensor",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MuscleGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per joint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerJoint<T> {
    pub shoulder: T,
    pub elbow: T,
}

impl<T> PerJoint<T> {
    pub fn from_fn(mut f: impl FnMut(Joint) -> T) -> Self {
        PerJoint {
            shoulder: f(Joint::Shoulder),
            elbow: f(Joint::Elbow),
        }
    }

    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> PerJoint<U> {
        PerJoint {
            shoulder: f(self.shoulder),
            elbow: f(self.elbow),
        }
    }
}

impl<T> Index<Joint> for PerJoint<T> {
    type Output = T;
    fn index(&self, j: Joint) -> &T {
        match j {
            Joint::Shoulder => &self.shoulder,
            Joint::Elbow => &self.elbow,
        }
    }
}

impl<T> IndexMut<Joint> for PerJoint<T> {
    fn index_mut(&mut self, j: Joint) -> &mut T {
        match j {
            Joint::Shoulder => &mut self.shoulder,
            Joint::Elbow => &mut self.elbow,
        }
    }
}

/// One value per muscle group, indexed by [`MuscleGroup`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerGroup<T>([T; 4]);

impl<T> PerGroup<T> {
    pub fn from_fn(mut f: impl FnMut(MuscleGroup) -> T) -> Self {
        PerGroup(MuscleGroup::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (MuscleGroup, &T)> {
        MuscleGroup::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<MuscleGroup> for PerGroup<T> {
    type Output = T;
    fn index(&self, g: MuscleGroup) -> &T {
        &self.0[g.index()]
    }
}

impl<T> IndexMut<MuscleGroup> for PerGroup<T> {
    fn index_mut(&mut self, g: MuscleGroup) -> &mut T {
        &mut self.0[g.index()]
    }
}

/// `(c0 + c_e·θe + c_ee·θe² + c_s·θs) · G` with angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityRow {
    pub constant: f64,
    pub theta_e: f64,
    #[serde(default)]
    pub theta_e_sq: f64,
    pub theta_s: f64,
    pub gain_male: f64,
    pub gain_female: f64,
}

impl CapacityRow {
    pub fn gain(&self, gender: Gender) -> f64 {
        match gender {
            Gender::Male => self.gain_male,
            Gender::Female => self.gain_female,
        }
    }

    /// Unclamped polynomial value.
    pub fn evaluate(&self, theta_s_deg: f64, theta_e_deg: f64, gender: Gender) -> f64 {
        (self.constant
            + self.theta_e * theta_e_deg
            + self.theta_e_sq * theta_e_deg * theta_e_deg
            + self.theta_s * theta_s_deg)
            * self.gain(gender)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityCoefficients {
    pub elbow_flexion: CapacityRow,
    pub elbow_extension: CapacityRow,
    pub shoulder_flexion: CapacityRow,
    pub shoulder_extension: CapacityRow,
}

impl Default for CapacityCoefficients {
    fn default() -> Self {
        CapacityCoefficients {
            elbow_flexion: CapacityRow {
                constant: 336.29,
                theta_e: 1.544,
                theta_e_sq: -0.0085,
                theta_s: -0.5,
                gain_male: 0.1913,
                gain_female: 0.1005,
            },
            elbow_extension: CapacityRow {
                constant: 264.153,
                theta_e: 0.575,
                theta_e_sq: 0.0,
                theta_s: -0.425,
                gain_male: 0.2126,
                gain_female: 0.1153,
            },
            shoulder_flexion: CapacityRow {
                constant: 227.338,
                theta_e: 0.525,
                theta_e_sq: 0.0,
                theta_s: -0.296,
                gain_male: 0.2854,
                gain_female: 0.1495,
            },
            shoulder_extension: CapacityRow {
                constant: 204.562,
                theta_e: 0.0,
                theta_e_sq: 0.0,
                theta_s: 0.099,
                gain_male: 0.4957,
                gain_female: 0.2485,
            },
        }
    }
}

impl CapacityCoefficients {
    pub fn row(&self, group: MuscleGroup) -> &CapacityRow {
        match group {
            MuscleGroup::ElbowFlexor => &self.elbow_flexion,
            MuscleGroup::ElbowExtensor => &self.elbow_extension,
            MuscleGroup::ShoulderFlexor => &self.shoulder_flexion,
            MuscleGroup::ShoulderExtensor => &self.shoulder_extension,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for group in MuscleGroup::ALL {
            let row = self.row(group);
            let finite = [row.constant, row.theta_e, row.theta_e_sq, row.theta_s]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(format!("{group}: coefficients must be finite"));
            }
            if !(row.gain_male > 0.0 && row.gain_female > 0.0) {
                return Err(format!("{group}: gender gains must be positive"));
            }
        }
        Ok(())
    }

    /// Raw polynomial for a group at angles given in degrees.
    pub fn raw_capacity(
        &self,
        group: MuscleGroup,
        theta_s_deg: f64,
        theta_e_deg: f64,
        gender: Gender,
    ) -> f64 {
        self.row(group).evaluate(theta_s_deg, theta_e_deg, gender)
    }

    /// Maximal voluntary torque in N·m, clamped at zero.
    pub fn joint_capacity(
        &self,
        joint: Joint,
        movement: Movement,
        theta_s_deg: f64,
        theta_e_deg: f64,
        gender: Gender,
    ) -> f64 {
        let raw = self.raw_capacity(
            MuscleGroup::new(joint, movement),
            theta_s_deg,
            theta_e_deg,
            gender,
        );
        if raw <= 0.0 {
            log::warn!(
                "non-positive {joint:?} {movement:?} capacity {raw:.3} N·m at θs = {theta_s_deg:.2}°, θe = {theta_e_deg:.2}°"
            );
            0.0
        } else {
            raw
        }
    }

    /// Capacities of the groups active in `phase`, from angles in radians.
    pub fn phase_capacity(&self, phase: Phase, theta_s: f64, theta_e: f64, gender: Gender) -> PerJoint<f64> {
        let (s, e) = (theta_s.to_degrees(), theta_e.to_degrees());
        PerJoint::from_fn(|j| self.joint_capacity(j, phase.movement(j), s, e, gender))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> CapacityCoefficients {
        CapacityCoefficients::default()
    }

    #[test]
    fn shoulder_extension_male_at_zero() {
        let v = table().joint_capacity(Joint::Shoulder, Movement::Extension, 0.0, 0.0, Gender::Male);
        assert_relative_eq!(v, 101.40, max_relative = 5e-4);
        assert_relative_eq!(v, 204.562 * 0.4957, epsilon = 1e-12);
    }

    #[test]
    fn elbow_flexion_female() {
        let v = table().joint_capacity(Joint::Elbow, Movement::Flexion, 30.0, 90.0, Gender::Female);
        assert_relative_eq!(v, 39.34, max_relative = 5e-4);
    }

    #[test]
    fn zero_gain_gives_zero() {
        let mut row = table().elbow_extension;
        row.gain_male = 0.0;
        assert_eq!(row.evaluate(20.0, 40.0, Gender::Male), 0.0);
    }

    #[test]
    fn phase_selection() {
        let t = table();
        let push = t.phase_capacity(Phase::Push, 0.0, 0.0, Gender::Male);
        assert_relative_eq!(push.shoulder, 64.88, max_relative = 5e-4);
        assert_relative_eq!(push.elbow, 56.16, max_relative = 5e-4);
        let pull = t.phase_capacity(Phase::Pull, 0.0, 0.0, Gender::Male);
        assert_relative_eq!(pull.shoulder, 101.40, max_relative = 5e-4);
        assert_relative_eq!(pull.elbow, 64.33, max_relative = 5e-4);
        assert_ne!(push, pull);
    }

    #[test]
    fn negative_polynomial_clamps() {
        let mut t = table();
        t.elbow_flexion.constant = -1000.0;
        let v = t.joint_capacity(Joint::Elbow, Movement::Flexion, 0.0, 10.0, Gender::Male);
        assert_eq!(v, 0.0);
        assert!(t.raw_capacity(MuscleGroup::ElbowFlexor, 0.0, 10.0, Gender::Male) < 0.0);
    }

    #[test]
    fn group_mapping_is_consistent() {
        for g in MuscleGroup::ALL {
            assert_eq!(MuscleGroup::new(g.joint(), g.movement()), g);
            assert_eq!(g.phase().groups()[g.joint()], g);
        }
        assert_eq!(Phase::Push.groups().shoulder, MuscleGroup::ShoulderFlexor);
        assert_eq!(Phase::Push.groups().elbow, MuscleGroup::ElbowExtensor);
        assert_eq!(Phase::Pull.groups().shoulder, MuscleGroup::ShoulderExtensor);
        assert_eq!(Phase::Pull.groups().elbow, MuscleGroup::ElbowFlexor);
    }

    #[test]
    fn default_gains_favor_male() {
        let t = table();
        t.validate().unwrap();
        for g in MuscleGroup::ALL {
            assert!(t.row(g).gain_male > t.row(g).gain_female);
        }
    }
}
