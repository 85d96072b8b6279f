use super::profile::{CapacityMode, ConstantMvc, CycleProfile, TaskModel};
use crate::capacity::{Joint, MuscleGroup, PerGroup, PerJoint, Phase};
use crate::error::Result;
use crate::kinematics::step_count;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub phase: Phase,
    pub theta_s: f64,
    pub theta_e: f64,
    /// |Γ_joint| per joint.
    pub demand: PerJoint<f64>,
    /// Γ_MVC of the active group per joint.
    pub capacity: PerJoint<f64>,
    /// Γ_cem of the active group per joint.
    pub merged: PerJoint<f64>,
    pub groups: PerGroup<f64>,
}

/// Dense time series of a simulated task.
#[derive(Debug, Clone, PartialEq)]
pub struct FatigueTrace {
    pub rows: Vec<TraceRow>,
    /// Γ_cem of every group before any work.
    pub initial: PerGroup<f64>,
}

impl FatigueTrace {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// First sampled instant where the merged Γ_cem of a joint is no larger
    /// than its demand.
    pub fn first_crossing(&self) -> PerJoint<Option<f64>> {
        PerJoint::from_fn(|j| self.rows.iter().find(|r| r.merged[j] <= r.demand[j]).map(|r| r.t))
    }

    pub fn group_series(&self, group: MuscleGroup) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r.groups[group])
    }
}

/// Evaluates the task on the uniform grid `t0, t0+dt, …, t0+duration`.
///
/// A zero duration yields an empty trace that still carries the initial
/// capacities.
pub fn simulate(task: &TaskModel, mode: CapacityMode, duration: f64) -> Result<FatigueTrace> {
    let profile = CycleProfile::build(task, mode)?;
    trace_from_profile(&profile, duration)
}

pub fn simulate_static_mode(task: &TaskModel, policy: ConstantMvc, duration: f64) -> Result<FatigueTrace> {
    simulate(task, CapacityMode::Static(policy), duration)
}

/// Dense trace on the simulation grid from an already built cycle profile.
pub fn trace_from_profile(profile: &CycleProfile, duration: f64) -> Result<FatigueTrace> {
    let initial = profile.initial_capacity();
    if duration == 0.0 {
        return Ok(FatigueTrace {
            rows: Vec::new(),
            initial,
        });
    }
    let dt = profile.push.dt;
    let total = step_count(duration, dt)?;
    let first = profile.schedule.starts_with;
    let first_profile = profile.phase(first);
    let second_profile = profile.phase(first.other());
    let n_first = first_profile.steps();
    let n_cycle = n_first + second_profile.steps();
    let t0 = profile.schedule.start_time;

    let rows = (0..=total)
        .map(|i| {
            let cycles = (i / n_cycle) as f64;
            let r = i % n_cycle;
            let (active, sample_idx, completed_first) = if r < n_first {
                (first_profile, r, cycles)
            } else {
                (second_profile, r - n_first, cycles + 1.0)
            };
            let sample = &active.samples[sample_idx];
            let partial = active.exponent[sample_idx];
            let active_groups = active.phase.groups();
            let groups = PerGroup::from_fn(|g| {
                if g.phase() == active.phase {
                    profile.capacity_after(g, cycles, partial[g.joint()])
                } else if g.phase() == first {
                    profile.capacity_after(g, completed_first, 0.0)
                } else {
                    profile.capacity_after(g, cycles, 0.0)
                }
            });
            TraceRow {
                t: t0 + i as f64 * dt,
                phase: active.phase,
                theta_s: sample.state.theta_s,
                theta_e: sample.state.theta_e,
                demand: sample.demand,
                capacity: sample.capacity,
                merged: PerJoint::from_fn(|j: Joint| groups[active_groups[j]]),
                groups,
            }
        })
        .collect();
    Ok(FatigueTrace { rows, initial })
}
