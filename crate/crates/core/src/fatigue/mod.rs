//! Fatigue state of the four muscle groups during a repetitive push/pull task.
//!
//! Each group follows `dΓcem/dt = −k·(Γjoint/ΓMVC)·Γcem` while its phase is
//! active and holds its value while the antagonist works. Because the motion
//! is periodic, the exponent gained per cycle is identical for every cycle;
//! [`CycleProfile`] integrates one cycle and evaluates any later instant in
//! closed form.

mod profile;
mod trace;

pub use profile::{CapacityMode, ConstantMvc, CycleProfile, PhaseProfile, PhaseSample, TaskModel};
pub use trace::{simulate, simulate_static_mode, trace_from_profile, FatigueTrace, TraceRow};

use serde::{Deserialize, Serialize};

use crate::capacity::Phase;
use crate::error::{Error, Result};

/// Relative slack used when classifying instants that fall on phase boundaries.
const BOUNDARY_EPS: f64 = 1e-9;

pub fn per_minute_to_per_second(k: f64) -> f64 {
    k / 60.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSchedule {
    pub push_duration: f64,
    pub pull_duration: f64,
    pub start_time: f64,
    pub starts_with: Phase,
}

/// Position of an instant within the repetitive work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseClock {
    pub phase: Phase,
    /// Completed cycles since the start of work.
    pub cycle_index: u64,
    /// Time elapsed inside the current phase.
    pub phase_offset: f64,
    /// Total time spent in the current phase kind since the start of work.
    pub active_time: f64,
}

impl CycleSchedule {
    pub fn new(push_duration: f64, pull_duration: f64) -> Result<Self> {
        for (name, v) in [("push", push_duration), ("pull", pull_duration)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} duration must be positive, got {v}"
                )));
            }
        }
        Ok(CycleSchedule {
            push_duration,
            pull_duration,
            start_time: 0.0,
            starts_with: Phase::Push,
        })
    }

    pub fn starting_at(mut self, t0: f64) -> Self {
        self.start_time = t0;
        self
    }

    pub fn starting_with(mut self, phase: Phase) -> Self {
        self.starts_with = phase;
        self
    }

    pub fn period(&self) -> f64 {
        self.push_duration + self.pull_duration
    }

    pub fn duration(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Push => self.push_duration,
            Phase::Pull => self.pull_duration,
        }
    }

    /// Offset of `phase` from the start of each cycle.
    pub fn phase_start(&self, phase: Phase) -> f64 {
        if phase == self.starts_with {
            0.0
        } else {
            self.duration(self.starts_with)
        }
    }

    pub fn phase_clock(&self, t: f64) -> Result<PhaseClock> {
        let elapsed = t - self.start_time;
        if elapsed.is_nan() || elapsed < 0.0 {
            return Err(Error::NegativeTime {
                t,
                start: self.start_time,
            });
        }
        let period = self.period();
        let slack = BOUNDARY_EPS * period.max(1.0);
        let cycles = ((elapsed + slack) / period).floor();
        let within = (elapsed - cycles * period).max(0.0);
        let first = self.starts_with;
        let first_len = self.duration(first);
        let (phase, phase_offset) = if within + slack < first_len {
            (first, within)
        } else {
            (first.other(), (within - first_len).max(0.0))
        };
        Ok(PhaseClock {
            phase,
            cycle_index: cycles as u64,
            phase_offset,
            active_time: cycles * self.duration(phase) + phase_offset,
        })
    }
}

/// Cumulative trapezoidal integral of uniformly spaced samples, starting at 0.
pub fn trapezoid_cumulative(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    if let Some(first) = values.first() {
        out.push(0.0);
        let mut prev = *first;
        for &v in &values[1..] {
            acc += 0.5 * (prev + v) * dt;
            out.push(acc);
            prev = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sched() -> CycleSchedule {
        CycleSchedule::new(5.0, 5.0).unwrap()
    }

    #[test]
    fn clock_at_start() {
        let c = sched().phase_clock(0.0).unwrap();
        assert_eq!(c.phase, Phase::Push);
        assert_eq!(c.cycle_index, 0);
        assert_eq!(c.active_time, 0.0);
    }

    #[test]
    fn clock_in_first_pull() {
        let c = sched().phase_clock(7.0).unwrap();
        assert_eq!(c.phase, Phase::Pull);
        assert_eq!(c.cycle_index, 0);
        // t_pull = t − (ℓ+1)·T_push
        assert_abs_diff_eq!(c.active_time, 7.0 - 5.0, epsilon = 1e-12);
    }

    #[test]
    fn clock_in_second_push() {
        let c = sched().phase_clock(12.0).unwrap();
        assert_eq!(c.phase, Phase::Push);
        assert_eq!(c.cycle_index, 1);
        // t_push = t − ℓ·T_pull
        assert_abs_diff_eq!(c.active_time, 12.0 - 5.0, epsilon = 1e-12);
    }

    #[test]
    fn clock_matches_direct_counting() {
        let s = CycleSchedule::new(3.0, 2.0).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.13;
            let c = s.phase_clock(t).unwrap();
            // count elapsed time phase by phase
            let (mut push, mut pull, mut clock, mut phase) = (0.0, 0.0, 0.0, Phase::Push);
            loop {
                let len = s.duration(phase);
                let step = if t < clock + len { t - clock } else { len };
                match phase {
                    Phase::Push => push += step,
                    Phase::Pull => pull += step,
                }
                if t < clock + len {
                    break;
                }
                clock += len;
                phase = phase.other();
            }
            assert_eq!(c.phase, phase, "t = {t}");
            let active = if phase == Phase::Push { push } else { pull };
            assert_abs_diff_eq!(c.active_time, active, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_belongs_to_next_phase() {
        let s = sched();
        assert_eq!(s.phase_clock(5.0).unwrap().phase, Phase::Pull);
        assert_eq!(s.phase_clock(10.0).unwrap().phase, Phase::Push);
        assert_eq!(s.phase_clock(10.0).unwrap().cycle_index, 1);
        // 0.1 * 100 is not exactly 10 in binary
        let c = s.phase_clock(0.1 * 100.0).unwrap();
        assert_eq!((c.phase, c.cycle_index), (Phase::Push, 1));
    }

    #[test]
    fn pull_first_schedule() {
        let s = sched().starting_with(Phase::Pull).starting_at(2.0);
        let c = s.phase_clock(3.0).unwrap();
        assert_eq!(c.phase, Phase::Pull);
        let c = s.phase_clock(8.0).unwrap();
        assert_eq!(c.phase, Phase::Push);
        assert_abs_diff_eq!(c.active_time, 1.0, epsilon = 1e-12);
        assert_eq!(s.phase_start(Phase::Push), 5.0);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(matches!(
            sched().starting_at(1.0).phase_clock(0.5),
            Err(Error::NegativeTime { .. })
        ));
        assert!(CycleSchedule::new(0.0, 5.0).is_err());
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let v: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64 * 0.1).collect();
        let c = trapezoid_cumulative(&v, 0.1);
        assert_abs_diff_eq!(c[10], 1.0, epsilon = 1e-14);
        assert!(trapezoid_cumulative(&[], 0.1).is_empty());
    }
}
