//! Scenario files, run orchestration and trace output.
//!
//! A scenario is a JSON document with three sections (`operator`, `task`,
//! `run`) and an optional `capacity` table. Unknown keys are rejected and
//! every numeric key carries its unit in the name.

use std::io::Write;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityCoefficients, Gender, MuscleGroup, PerGroup, PerJoint};
use crate::dynamics::{ArmInertialModel, ForceConvention, LoadSpec, SegmentParams};
use crate::error::{Error, Result};
use crate::fatigue::{CapacityMode, ConstantMvc, CycleProfile, CycleSchedule, FatigueTrace, TaskModel};
use crate::kinematics::{step_count, ElbowBranch, Point2, ENDPOINT_MARGIN};

pub const DEFAULT_K_SHOULDER_PER_MIN: f64 = 0.17;
pub const DEFAULT_K_ELBOW_PER_MIN: f64 = 0.24;
pub const DEFAULT_DT_S: f64 = 0.01;
/// Share of a phase with opposing torque sign above which a group is flagged.
pub const SIGN_CONFLICT_FRACTION: f64 = 0.05;

fn default_k_shoulder() -> f64 {
    DEFAULT_K_SHOULDER_PER_MIN
}

fn default_k_elbow() -> f64 {
    DEFAULT_K_ELBOW_PER_MIN
}

fn default_dt() -> f64 {
    DEFAULT_DT_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub operator: Operator,
    pub task: Task,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityCoefficients>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operator {
    pub stature_m: f64,
    pub body_mass_kg: f64,
    #[serde(default)]
    pub gender: Gender,
    #[serde(default = "default_k_shoulder")]
    pub k_shoulder_per_min: f64,
    #[serde(default = "default_k_elbow")]
    pub k_elbow_per_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<SegmentOverrides>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_arm: Option<SegmentParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forearm_hand: Option<SegmentParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub p0_m: [f64; 2],
    pub pf_m: [f64; 2],
    pub t_push_s: f64,
    pub t_pull_s: f64,
    pub push_force_n: f64,
    pub pull_force_n: f64,
    #[serde(default)]
    pub tool_mass_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Quasistatic,
    StaticMinMvc,
    StaticFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTorques {
    pub shoulder_flexor: f64,
    pub shoulder_extensor: f64,
    pub elbow_flexor: f64,
    pub elbow_extensor: f64,
}

impl From<GroupTorques> for PerGroup<f64> {
    fn from(v: GroupTorques) -> Self {
        PerGroup::from_fn(|g| match g {
            MuscleGroup::ShoulderFlexor => v.shoulder_flexor,
            MuscleGroup::ShoulderExtensor => v.shoulder_extensor,
            MuscleGroup::ElbowFlexor => v.elbow_flexor,
            MuscleGroup::ElbowExtensor => v.elbow_extensor,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub elbow_branch: ElbowBranch,
    #[serde(default)]
    pub force_convention: ForceConvention,
    /// Constant Γ_MVC per group for `static_fixed` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_mvc_nm: Option<GroupTorques>,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(classify_json_error)?;
    scenario.validate()?;
    Ok(scenario)
}

pub(crate) fn classify_json_error(e: serde_json::Error) -> Error {
    match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

fn check(cond: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::validation(path, message()))
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let op = &self.operator;
        check((1.0..=2.5).contains(&op.stature_m), "operator.stature_m", || {
            format!("{} m outside [1.0, 2.5]", op.stature_m)
        })?;
        check(
            (30.0..=200.0).contains(&op.body_mass_kg),
            "operator.body_mass_kg",
            || format!("{} kg outside [30, 200]", op.body_mass_kg),
        )?;
        check(
            non_negative(op.k_shoulder_per_min),
            "operator.k_shoulder_per_min",
            || "must be finite and non-negative".into(),
        )?;
        check(
            non_negative(op.k_elbow_per_min),
            "operator.k_elbow_per_min",
            || "must be finite and non-negative".into(),
        )?;
        if let Some(seg) = &op.segments {
            for (path, s) in [
                ("operator.segments.upper_arm", seg.upper_arm),
                ("operator.segments.forearm_hand", seg.forearm_hand),
            ] {
                if let Some(s) = s {
                    s.validate().map_err(|m| Error::validation(path, m))?;
                }
            }
        }
        if let Some(c) = &self.capacity {
            c.validate().map_err(|m| Error::validation("capacity", m))?;
        }

        let task = &self.task;
        for (path, v) in [("task.p0_m", task.p0_m), ("task.pf_m", task.pf_m)] {
            check(v.iter().all(|x| x.is_finite()), path, || {
                "coordinates must be finite".into()
            })?;
        }
        check(positive(task.t_push_s), "task.t_push_s", || {
            "must be positive".into()
        })?;
        check(positive(task.t_pull_s), "task.t_pull_s", || {
            "must be positive".into()
        })?;
        check(non_negative(task.push_force_n), "task.push_force_n", || {
            "must be non-negative".into()
        })?;
        check(non_negative(task.pull_force_n), "task.pull_force_n", || {
            "must be non-negative".into()
        })?;
        check(non_negative(task.tool_mass_kg), "task.tool_mass_kg", || {
            "must be non-negative".into()
        })?;

        let run = &self.run;
        check(positive(run.dt_s), "run.dt_s", || "must be positive".into())?;
        for (path, v) in [("task.t_push_s", task.t_push_s), ("task.t_pull_s", task.t_pull_s)] {
            step_count(v, run.dt_s).map_err(|_| {
                Error::validation(
                    path,
                    format!("{v} s is not a multiple of run.dt_s = {} s", run.dt_s),
                )
            })?;
        }
        let period = task.t_push_s + task.t_pull_s;
        check(
            run.duration_s.is_finite() && run.duration_s >= period - 1e-9,
            "run.duration_s",
            || format!("{} s is shorter than one cycle ({period} s)", run.duration_s),
        )?;
        step_count(run.duration_s, run.dt_s).map_err(|_| {
            Error::validation(
                "run.duration_s",
                format!(
                    "{} s is not a multiple of run.dt_s = {} s",
                    run.duration_s, run.dt_s
                ),
            )
        })?;
        if run.mode == RunMode::StaticFixed {
            let fixed = run.fixed_mvc_nm.ok_or_else(|| {
                Error::validation("run.fixed_mvc_nm", "required when run.mode is static_fixed")
            })?;
            let values: PerGroup<f64> = fixed.into();
            for (g, v) in values.iter() {
                check(positive(*v), &format!("run.fixed_mvc_nm.{g}"), || {
                    "must be positive".into()
                })?;
            }
        }

        let arm = self.arm_model()?;
        let geom = arm.geometry(run.elbow_branch);
        let (p0, pf) = (point(task.p0_m), point(task.pf_m));
        for (path, p) in [("task.p0_m", p0), ("task.pf_m", pf)] {
            check(geom.is_reachable(&p, ENDPOINT_MARGIN), path, || {
                format!(
                    "unreachable endpoint ({}, {}): |P| = {:.4} m, reach is [{:.4}, {:.4}] m",
                    p.x,
                    p.y,
                    p.norm(),
                    geom.min_reach(),
                    geom.max_reach()
                )
            })?;
        }
        check(
            segment_distance_to_origin(&p0, &pf) >= geom.min_reach() + ENDPOINT_MARGIN,
            "task",
            || "the hand path crosses the unreachable region around the shoulder".into(),
        )?;
        Ok(())
    }

    /// Segment parameters after applying any overrides; tool mass attached.
    pub fn arm_model(&self) -> Result<ArmInertialModel> {
        let op = &self.operator;
        let base = ArmInertialModel::from_anthropometry(op.stature_m, op.body_mass_kg)
            .map_err(|e| Error::validation("operator", e.to_string()))?;
        let seg = op.segments.unwrap_or_default();
        ArmInertialModel::new(
            seg.upper_arm.unwrap_or(base.upper_arm),
            seg.forearm_hand.unwrap_or(base.forearm_hand),
            self.task.tool_mass_kg,
        )
        .map_err(|e| Error::validation("operator.segments", e.to_string()))
    }

    pub fn task_model(&self) -> Result<TaskModel> {
        self.validate()?;
        let task = &self.task;
        Ok(TaskModel {
            arm: self.arm_model()?,
            branch: self.run.elbow_branch,
            capacity: self.capacity.unwrap_or_default(),
            gender: self.operator.gender,
            fatigue_rate_per_min: PerJoint {
                shoulder: self.operator.k_shoulder_per_min,
                elbow: self.operator.k_elbow_per_min,
            },
            push_start: point(task.p0_m),
            push_end: point(task.pf_m),
            schedule: CycleSchedule::new(task.t_push_s, task.t_pull_s)?,
            loads: LoadSpec::new(task.push_force_n, task.pull_force_n)?,
            force_convention: self.run.force_convention,
            dt: self.run.dt_s,
        })
    }

    pub fn capacity_mode(&self) -> CapacityMode {
        match self.run.mode {
            RunMode::Quasistatic => CapacityMode::QuasiStatic,
            RunMode::StaticMinMvc => CapacityMode::Static(ConstantMvc::MinOverCycle),
            RunMode::StaticFixed => CapacityMode::Static(ConstantMvc::Fixed(
                self.run
                    .fixed_mvc_nm
                    .expect("validated: static_fixed carries fixed_mvc_nm")
                    .into(),
            )),
        }
    }
}

fn point(v: [f64; 2]) -> Point2 {
    Vector2::new(v[0], v[1])
}

fn segment_distance_to_origin(a: &Point2, b: &Point2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return a.norm();
    }
    let s = (-a.dot(&d) / len2).clamp(0.0, 1.0);
    (a + s * d).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: MuscleGroup,
    pub initial_capacity_nm: f64,
    pub final_capacity_nm: f64,
    pub cycle_exponent_increment: f64,
    /// Share of the active phase where the net torque opposes the group.
    pub opposing_torque_fraction: f64,
    pub sign_conflict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: RunMode,
    pub duration_s: f64,
    pub dt_s: f64,
    pub cycle_period_s: f64,
    /// First instant per joint where Γ_cem reaches the demand, if any.
    pub crossing_s: PerJoint<Option<f64>>,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: FatigueTrace,
    pub summary: RunSummary,
    pub profile: CycleProfile,
}

/// Summary metrics of a scenario from the fast-forward representation only.
pub fn summarize(scenario: &Scenario, profile: &CycleProfile) -> Result<RunSummary> {
    let duration = scenario.run.duration_s;
    let end = profile.schedule.start_time + duration;
    let final_capacity = profile.fatigue_at(end)?;
    let initial = profile.initial_capacity();
    let increments = profile.increments();
    let groups = MuscleGroup::ALL
        .iter()
        .map(|&g| {
            let opposing = profile.phase(g.phase()).opposing_fraction()[g.joint()];
            GroupSummary {
                group: g,
                initial_capacity_nm: initial[g],
                final_capacity_nm: final_capacity[g],
                cycle_exponent_increment: increments[g],
                opposing_torque_fraction: opposing,
                sign_conflict: opposing > SIGN_CONFLICT_FRACTION,
            }
        })
        .collect();
    Ok(RunSummary {
        mode: scenario.run.mode,
        duration_s: duration,
        dt_s: scenario.run.dt_s,
        cycle_period_s: profile.schedule.period(),
        crossing_s: profile.risk_crossing(duration),
        groups,
    })
}

/// Runs the full pipeline: kinematics, dynamics, capacity and fatigue.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let task = scenario.task_model()?;
    let profile = CycleProfile::build(&task, scenario.capacity_mode())?;
    let trace = crate::fatigue::trace_from_profile(&profile, scenario.run.duration_s)?;
    let summary = summarize(scenario, &profile)?;
    for g in summary.groups.iter().filter(|g| g.sign_conflict) {
        log::warn!(
            "net torque opposes {} for {:.1}% of its phase",
            g.group,
            100.0 * g.opposing_torque_fraction
        );
    }
    Ok(RunOutput {
        trace,
        summary,
        profile,
    })
}

pub const TRACE_COLUMNS: [&str; 14] = [
    "t_s",
    "phase",
    "theta_s_rad",
    "theta_e_rad",
    "gamma_joint_shoulder_nm",
    "gamma_joint_elbow_nm",
    "gamma_mvc_shoulder_nm",
    "gamma_mvc_elbow_nm",
    "gamma_cem_shoulder_nm",
    "gamma_cem_elbow_nm",
    "gamma_cem_shoulder_flexor_nm",
    "gamma_cem_shoulder_extensor_nm",
    "gamma_cem_elbow_flexor_nm",
    "gamma_cem_elbow_extensor_nm",
];

pub fn write_trace_csv<W: Write>(trace: &FatigueTrace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.rows {
        let mut rec = vec![r.t.to_string(), r.phase.to_string()];
        rec.extend(
            [
                r.theta_s,
                r.theta_e,
                r.demand.shoulder,
                r.demand.elbow,
                r.capacity.shoulder,
                r.capacity.elbow,
                r.merged.shoulder,
                r.merged.elbow,
            ]
            .iter()
            .chain(MuscleGroup::ALL.iter().map(|&g| &r.groups[g]))
            .map(|v| v.to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TASK1: &str = include_str!("../../../scenarios/task1.json");

    #[test]
    fn task1_fixture_loads() {
        let s = load_scenario(TASK1).unwrap();
        assert_eq!(s.operator.stature_m, 1.88);
        assert_eq!(s.task.tool_mass_kg, 2.0);
        assert_eq!(s.run.mode, RunMode::Quasistatic);
        assert_eq!(s.run.elbow_branch, ElbowBranch::ElbowDown);
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let text = r#"{
            "operator": {"stature_m": 1.8, "body_mass_kg": 80},
            "task": {"p0_m": [0.4, 0.1], "pf_m": [0.5, 0.1], "t_push_s": 2, "t_pull_s": 2,
                     "push_force_n": 10, "pull_force_n": 5},
            "run": {"duration_s": 8}
        }"#;
        let s = load_scenario(text).unwrap();
        assert_eq!(s.operator.gender, Gender::Male);
        assert_eq!(s.operator.k_shoulder_per_min, 0.17);
        assert_eq!(s.operator.k_elbow_per_min, 0.24);
        assert_eq!(s.run.dt_s, 0.01);
        assert_eq!(s.run.force_convention, ForceConvention::ExertedByHand);
        assert_eq!(s.task.tool_mass_kg, 0.0);
    }

    #[test]
    fn malformed_and_schema_errors() {
        assert!(matches!(load_scenario("{ not json"), Err(Error::Parse(_))));
        let extra = TASK1.replacen("\"operator\": {", "\"operator\": {\"height\": 2, ", 1);
        assert!(matches!(load_scenario(&extra), Err(Error::Schema(_))));
        let missing = r#"{"operator": {"stature_m": 1.8}, "task": {}, "run": {}}"#;
        assert!(matches!(load_scenario(missing), Err(Error::Schema(_))));
    }

    #[test]
    fn unreachable_endpoint_reports_path() {
        let mut s = load_scenario(TASK1).unwrap();
        s.task.pf_m = [1.0, 0.5];
        match s.validate() {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "task.pf_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn static_fixed_requires_values() {
        let mut s = load_scenario(TASK1).unwrap();
        s.run.mode = RunMode::StaticFixed;
        assert!(matches!(s.validate(), Err(Error::Validation { .. })));
        s.run.fixed_mvc_nm = Some(GroupTorques {
            shoulder_flexor: 70.0,
            shoulder_extensor: 100.0,
            elbow_flexor: 70.0,
            elbow_extensor: 60.0,
        });
        s.validate().unwrap();
        assert!(matches!(
            s.capacity_mode(),
            CapacityMode::Static(ConstantMvc::Fixed(_))
        ));
    }

    #[test]
    fn grid_alignment_checked() {
        let mut s = load_scenario(TASK1).unwrap();
        s.run.duration_s = 5.0;
        assert!(matches!(s.validate(), Err(Error::Validation { ref path, .. }) if path == "run.duration_s"));
        s.run.duration_s = 20.005;
        assert!(s.validate().is_err());
        s.run.duration_s = 20.0;
        s.run.dt_s = 0.3;
        assert!(matches!(s.validate(), Err(Error::Validation { ref path, .. }) if path == "task.t_push_s"));
    }

    #[test]
    fn path_through_shoulder_rejected() {
        let mut s = load_scenario(TASK1).unwrap();
        s.task.p0_m = [0.3, 0.0];
        s.task.pf_m = [-0.3, 0.0];
        assert!(matches!(s.validate(), Err(Error::Validation { ref path, .. }) if path == "task"));
    }

    #[test]
    fn one_cycle_grid_size() {
        let mut s = load_scenario(TASK1).unwrap();
        s.run.duration_s = 10.0;
        let out = run(&s).unwrap();
        assert_eq!(out.trace.len(), 1001);
    }

    #[test]
    fn empty_trace_is_header_only() {
        let trace = FatigueTrace {
            rows: Vec::new(),
            initial: PerGroup::default(),
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", TRACE_COLUMNS.join(","))
        );
    }
}
