//! Joint-level muscle fatigue prediction for repetitive push/pull arm tasks.
//!
//! The arm is a planar shoulder/elbow chain moving the hand along a straight
//! line between two rest points. For each sample of a cycle the library
//! computes the demanded joint torque (Lagrangian body torque plus the hand
//! load), the posture-dependent maximal voluntary torque of the active muscle
//! group, and integrates the exponential capacity decay of each group.
//! Periodicity lets any horizon be evaluated from a single integrated cycle.
//!
//! ```no_run
//! use armfatigue::scenario::{load_scenario, run};
//!
//! let text = std::fs::read_to_string("scenarios/task1.json").unwrap();
//! let scenario = load_scenario(&text).unwrap();
//! let out = run(&scenario).unwrap();
//! println!("elbow reaches its demand at {:?} s", out.summary.crossing_s.elbow);
//! ```

pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod fatigue;
pub mod kinematics;
pub mod scenario;
pub mod sweep;

pub use capacity::{CapacityCoefficients, Gender, Joint, Movement, MuscleGroup, PerGroup, PerJoint, Phase};
pub use dynamics::{ArmInertialModel, ForceConvention, LoadSpec, SegmentParams};
pub use error::{Error, Result};
pub use fatigue::{CapacityMode, ConstantMvc, CycleProfile, CycleSchedule, FatigueTrace, TaskModel};
pub use kinematics::{ArmGeometry, ElbowBranch, JointState, Point2, TrajectoryLeg};
pub use scenario::{load_scenario, Scenario};
