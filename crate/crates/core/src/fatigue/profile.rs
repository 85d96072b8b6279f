use nalgebra::Vector2;

use super::{per_minute_to_per_second, trapezoid_cumulative, CycleSchedule};
use crate::capacity::{CapacityCoefficients, Gender, Joint, MuscleGroup, PerGroup, PerJoint, Phase};
use crate::dynamics::{total_joint_torque, ArmInertialModel, ForceConvention, LoadSpec};
use crate::error::{Error, Result};
use crate::kinematics::{joint_trajectory, step_count, ElbowBranch, JointState, Point2, TrajectoryLeg};

/// Everything needed to evaluate one push/pull task for one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskModel {
    pub arm: ArmInertialModel,
    pub branch: ElbowBranch,
    pub capacity: CapacityCoefficients,
    pub gender: Gender,
    /// Fatigue rates per joint in min⁻¹, shared by both groups of a joint.
    pub fatigue_rate_per_min: PerJoint<f64>,
    /// Hand position at the start of the push.
    pub push_start: Point2,
    /// Hand position at the end of the push.
    pub push_end: Point2,
    pub schedule: CycleSchedule,
    pub loads: LoadSpec,
    pub force_convention: ForceConvention,
    pub dt: f64,
}

impl TaskModel {
    pub fn leg(&self, phase: Phase) -> Result<TrajectoryLeg> {
        let push = TrajectoryLeg::new(self.push_start, self.push_end, self.schedule.push_duration)?;
        Ok(match phase {
            Phase::Push => push,
            Phase::Pull => TrajectoryLeg {
                duration: self.schedule.pull_duration,
                ..push.reversed()
            },
        })
    }

    fn rate_per_second(&self, joint: Joint) -> f64 {
        per_minute_to_per_second(self.fatigue_rate_per_min[joint])
    }
}

/// How Γ_MVC enters the fatigue integral.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CapacityMode {
    /// Γ_MVC follows the posture.
    #[default]
    QuasiStatic,
    /// Γ_MVC held constant per group.
    Static(ConstantMvc),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantMvc {
    /// Smallest posture-dependent value over the group's active phase.
    MinOverCycle,
    Fixed(PerGroup<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub state: JointState,
    /// Signed net joint torque, flexion positive.
    pub torque: Vector2<f64>,
    /// Demand |Γ_joint| attributed to the active group of each joint.
    pub demand: PerJoint<f64>,
    /// Γ_MVC of the active group of each joint.
    pub capacity: PerJoint<f64>,
}

/// One phase of one cycle sampled on the simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub phase: Phase,
    pub dt: f64,
    pub samples: Vec<PhaseSample>,
    /// Running fatigue exponent `k·∫ demand/capacity` since the phase start.
    pub exponent: Vec<PerJoint<f64>>,
}

impl PhaseProfile {
    fn build(task: &TaskModel, phase: Phase) -> Result<Self> {
        let geom = task.arm.geometry(task.branch);
        let leg = task.leg(phase)?;
        let states = joint_trajectory(&geom, &leg, task.dt)?;
        let hand_force = task.loads.hand_force(phase, task.force_convention);
        let groups = phase.groups();
        let samples = states
            .into_iter()
            .map(|state| {
                let torque = total_joint_torque(&task.arm, &geom, &state, &hand_force);
                let (s_deg, e_deg) = (state.theta_s.to_degrees(), state.theta_e.to_degrees());
                let capacity =
                    PerJoint::from_fn(|j| task.capacity.raw_capacity(groups[j], s_deg, e_deg, task.gender));
                for j in [Joint::Shoulder, Joint::Elbow] {
                    if capacity[j].is_nan() || capacity[j] <= 0.0 {
                        return Err(Error::ZeroCapacity {
                            group: groups[j],
                            value: capacity[j],
                            t: state.t,
                        });
                    }
                }
                Ok(PhaseSample {
                    state,
                    torque,
                    demand: PerJoint {
                        shoulder: torque.x.abs(),
                        elbow: torque.y.abs(),
                    },
                    capacity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut profile = PhaseProfile {
            phase,
            dt: task.dt,
            samples,
            exponent: Vec::new(),
        };
        profile.integrate(task);
        Ok(profile)
    }

    fn integrate(&mut self, task: &TaskModel) {
        let per_joint = PerJoint::from_fn(|j| {
            let ratio: Vec<f64> = self.samples.iter().map(|s| s.demand[j] / s.capacity[j]).collect();
            let k = task.rate_per_second(j);
            trapezoid_cumulative(&ratio, self.dt)
                .into_iter()
                .map(|v| k * v)
                .collect::<Vec<_>>()
        });
        self.exponent = (0..self.samples.len())
            .map(|i| PerJoint {
                shoulder: per_joint.shoulder[i],
                elbow: per_joint.elbow[i],
            })
            .collect();
    }

    fn hold_capacity(&mut self, task: &TaskModel, value: PerJoint<f64>) {
        for s in &mut self.samples {
            s.capacity = value;
        }
        self.integrate(task);
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Number of grid steps in the phase.
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn increment(&self) -> PerJoint<f64> {
        *self.exponent.last().expect("phase has at least one sample")
    }

    /// Exponent accumulated `tau` seconds into the phase, integrating the
    /// linear interpolant of the demand ratio between grid samples.
    pub fn exponent_at(&self, tau: f64, k_per_second: PerJoint<f64>) -> PerJoint<f64> {
        let n = self.steps();
        let x = (tau / self.dt).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(1));
        let frac = x - i as f64;
        if n == 0 || frac <= 0.0 {
            return self.exponent[i];
        }
        PerJoint::from_fn(|j| {
            let r0 = self.samples[i].demand[j] / self.samples[i].capacity[j];
            let r1 = self.samples[i + 1].demand[j] / self.samples[i + 1].capacity[j];
            let r = r0 + frac * (r1 - r0);
            self.exponent[i][j] + k_per_second[j] * 0.5 * (r0 + r) * frac * self.dt
        })
    }

    /// Fraction of samples whose signed torque opposes the action of the
    /// group this phase attributes the demand to.
    pub fn opposing_fraction(&self) -> PerJoint<f64> {
        let groups = self.phase.groups();
        let n = self.samples.len().max(1) as f64;
        PerJoint::from_fn(|j| {
            let sign = groups[j].action_sign();
            let opposing = self
                .samples
                .iter()
                .filter(|s| {
                    let tau = match j {
                        Joint::Shoulder => s.torque.x,
                        Joint::Elbow => s.torque.y,
                    };
                    tau * sign < 0.0
                })
                .count();
            opposing as f64 / n
        })
    }
}

/// One simulated cycle plus the constants needed to fast-forward to any
/// later instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleProfile {
    pub schedule: CycleSchedule,
    pub push: PhaseProfile,
    pub pull: PhaseProfile,
    k_per_second: PerJoint<f64>,
}

impl CycleProfile {
    pub fn build(task: &TaskModel, mode: CapacityMode) -> Result<Self> {
        for j in [Joint::Shoulder, Joint::Elbow] {
            let k = task.fatigue_rate_per_min[j];
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "fatigue rate for {j:?} must be non-negative, got {k}"
                )));
            }
        }
        step_count(task.schedule.push_duration, task.dt)?;
        step_count(task.schedule.pull_duration, task.dt)?;
        let mut push = PhaseProfile::build(task, Phase::Push)?;
        let mut pull = PhaseProfile::build(task, Phase::Pull)?;
        if let CapacityMode::Static(policy) = mode {
            for profile in [&mut push, &mut pull] {
                let groups = profile.phase.groups();
                let held = match policy {
                    ConstantMvc::MinOverCycle => PerJoint::from_fn(|j| {
                        profile
                            .samples
                            .iter()
                            .map(|s| s.capacity[j])
                            .fold(f64::INFINITY, f64::min)
                    }),
                    ConstantMvc::Fixed(values) => PerJoint::from_fn(|j| values[groups[j]]),
                };
                for j in [Joint::Shoulder, Joint::Elbow] {
                    if !(held[j] > 0.0 && held[j].is_finite()) {
                        return Err(Error::ZeroCapacity {
                            group: groups[j],
                            value: held[j],
                            t: 0.0,
                        });
                    }
                }
                profile.hold_capacity(task, held);
            }
        }
        Ok(CycleProfile {
            schedule: task.schedule,
            push,
            pull,
            k_per_second: PerJoint::from_fn(|j| task.rate_per_second(j)),
        })
    }

    pub fn phase(&self, phase: Phase) -> &PhaseProfile {
        match phase {
            Phase::Push => &self.push,
            Phase::Pull => &self.pull,
        }
    }

    /// Exponent gained by each group over one full cycle.
    pub fn increments(&self) -> PerGroup<f64> {
        PerGroup::from_fn(|g| self.phase(g.phase()).increment()[g.joint()])
    }

    /// Γ_cem at the start of work: the capacity at each group's first activation.
    pub fn initial_capacity(&self) -> PerGroup<f64> {
        PerGroup::from_fn(|g| self.phase(g.phase()).samples[0].capacity[g.joint()])
    }

    /// Accumulated fatigue exponent of every group at time `t`.
    pub fn exponent_at(&self, t: f64) -> Result<PerGroup<f64>> {
        let clock = self.schedule.phase_clock(t)?;
        let increments = self.increments();
        let partial = self
            .phase(clock.phase)
            .exponent_at(clock.phase_offset, self.k_per_second);
        let cycles = clock.cycle_index as f64;
        let first = self.schedule.starts_with;
        Ok(PerGroup::from_fn(|g| {
            let own = g.phase();
            if own == clock.phase {
                cycles * increments[g] + partial[g.joint()]
            } else if own == first {
                // the first phase of the current cycle is already complete
                (cycles + 1.0) * increments[g]
            } else {
                cycles * increments[g]
            }
        }))
    }

    /// Γ_cem of every group at time `t`.
    pub fn fatigue_at(&self, t: f64) -> Result<PerGroup<f64>> {
        let exponent = self.exponent_at(t)?;
        let initial = self.initial_capacity();
        Ok(PerGroup::from_fn(|g| initial[g] * (-exponent[g]).exp()))
    }

    /// Γ_cem of a group after `cycles` full cycles plus `exponent` of the
    /// current phase.
    pub(crate) fn capacity_after(&self, group: MuscleGroup, cycles: f64, exponent: f64) -> f64 {
        self.initial_capacity()[group] * (-(cycles * self.increments()[group] + exponent)).exp()
    }

    /// First instant, within `horizon` seconds of the work start, at which
    /// the active group of a joint has no more capacity than the demand.
    ///
    /// Every grid sample of the cycle is checked once: the number of
    /// cycles needed for it to cross follows from the per-cycle increment.
    pub fn risk_crossing(&self, horizon: f64) -> PerJoint<Option<f64>> {
        let increments = self.increments();
        let first = self.schedule.starts_with;
        let cycle_steps = (self.push.steps() + self.pull.steps()) as f64;
        let dt = self.push.dt;
        PerJoint::from_fn(|j| {
            let mut best: Option<f64> = None;
            for phase in [Phase::Push, Phase::Pull] {
                let profile = self.phase(phase);
                let group = phase.groups()[j];
                let c0 = self.initial_capacity()[group];
                let inc = increments[group];
                let offset_steps = if phase == first {
                    0
                } else {
                    self.phase(first).steps()
                };
                // the last sample of a phase is the first sample of the next one
                for r in 0..profile.steps() {
                    let demand = profile.samples[r].demand[j];
                    let partial = profile.exponent[r][j];
                    let Some(cycles) = self.cycles_to_cross(group, c0, inc, demand, partial) else {
                        continue;
                    };
                    // same grid arithmetic as the dense trace
                    let elapsed = (cycles * cycle_steps + (offset_steps + r) as f64) * dt;
                    if elapsed <= horizon + 1e-9 && best.is_none_or(|b| elapsed < b) {
                        best = Some(elapsed);
                    }
                }
            }
            best.map(|e| self.schedule.start_time + e)
        })
    }

    fn cycles_to_cross(
        &self,
        group: MuscleGroup,
        c0: f64,
        inc: f64,
        demand: f64,
        partial: f64,
    ) -> Option<f64> {
        if demand <= 0.0 {
            return None;
        }
        let crossed = |cycles: f64| self.capacity_after(group, cycles, partial) <= demand;
        if crossed(0.0) {
            return Some(0.0);
        }
        if inc <= 0.0 {
            return None;
        }
        let need = (c0 / demand).ln() - partial;
        let mut cycles = (need / inc).ceil().max(0.0);
        if !cycles.is_finite() {
            return None;
        }
        // settle rounding so the answer agrees with the pointwise test
        while cycles > 0.0 && crossed(cycles - 1.0) {
            cycles -= 1.0;
        }
        while !crossed(cycles) {
            cycles += 1.0;
        }
        Some(cycles)
    }
}
