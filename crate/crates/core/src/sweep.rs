//! Grid search over task configurations.
//!
//! Every cell is the base scenario with some task fields replaced. Cells are
//! evaluated independently (in parallel) and ranked by the grid objective.
//! Rows always come back in grid order; the rank is a column.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{MuscleGroup, PerGroup, PerJoint};
use crate::error::{Error, Result};
use crate::fatigue::CycleProfile;
use crate::scenario::{classify_json_error, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub p0_m: [f64; 2],
    pub pf_m: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Latest first risk crossing over both joints; no crossing ranks first.
    #[default]
    MaxTimeToRisk,
    /// Smallest fatigue exponent summed over the four groups at the horizon.
    MinTotalExponent,
}

/// Candidate values per task field. An empty list keeps the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub endpoints: Vec<Endpoints>,
    #[serde(default)]
    pub push_force_n: Vec<f64>,
    #[serde(default)]
    pub pull_force_n: Vec<f64>,
    #[serde(default)]
    pub t_push_s: Vec<f64>,
    #[serde(default)]
    pub t_pull_s: Vec<f64>,
    #[serde(default)]
    pub objective: Objective,
}

pub fn load_grid(text: &str) -> Result<SweepGrid> {
    let grid: SweepGrid = serde_json::from_str(text).map_err(classify_json_error)?;
    if grid.endpoints.is_empty()
        && grid.push_force_n.is_empty()
        && grid.pull_force_n.is_empty()
        && grid.t_push_s.is_empty()
        && grid.t_pull_s.is_empty()
    {
        return Err(Error::validation("grid", "no candidate values listed"));
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub endpoints: Endpoints,
    pub push_force_n: f64,
    pub pull_force_n: f64,
    pub t_push_s: f64,
    pub t_pull_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub crossing_s: PerJoint<Option<f64>>,
    /// Earliest crossing over both joints.
    pub time_to_risk_s: Option<f64>,
    pub total_exponent: f64,
    pub increments: PerGroup<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// 1-based rank; `None` for failed cells.
    pub rank: Option<usize>,
    pub cell: SweepCell,
    pub outcome: std::result::Result<CellMetrics, String>,
}

fn or_base(list: &[f64], base: f64) -> Vec<f64> {
    if list.is_empty() {
        vec![base]
    } else {
        list.to_vec()
    }
}

/// Cartesian product of the grid lists, endpoints varying slowest.
pub fn expand(base: &Scenario, grid: &SweepGrid) -> Vec<SweepCell> {
    let t = &base.task;
    let endpoints = if grid.endpoints.is_empty() {
        vec![Endpoints {
            p0_m: t.p0_m,
            pf_m: t.pf_m,
        }]
    } else {
        grid.endpoints.clone()
    };
    let push = or_base(&grid.push_force_n, t.push_force_n);
    let pull = or_base(&grid.pull_force_n, t.pull_force_n);
    let t_push = or_base(&grid.t_push_s, t.t_push_s);
    let t_pull = or_base(&grid.t_pull_s, t.t_pull_s);
    let mut cells = Vec::new();
    for &e in &endpoints {
        for &fp in &push {
            for &fl in &pull {
                for &tp in &t_push {
                    for &tl in &t_pull {
                        cells.push(SweepCell {
                            index: cells.len(),
                            endpoints: e,
                            push_force_n: fp,
                            pull_force_n: fl,
                            t_push_s: tp,
                            t_pull_s: tl,
                        });
                    }
                }
            }
        }
    }
    cells
}

impl SweepCell {
    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        s.task.p0_m = self.endpoints.p0_m;
        s.task.pf_m = self.endpoints.pf_m;
        s.task.push_force_n = self.push_force_n;
        s.task.pull_force_n = self.pull_force_n;
        s.task.t_push_s = self.t_push_s;
        s.task.t_pull_s = self.t_pull_s;
        s
    }
}

/// Metrics of one scenario without building the dense trace.
pub fn evaluate(scenario: &Scenario) -> Result<CellMetrics> {
    let task = scenario.task_model()?;
    let profile = CycleProfile::build(&task, scenario.capacity_mode())?;
    let horizon = scenario.run.duration_s;
    let crossing_s = profile.risk_crossing(horizon);
    let exponent = profile.exponent_at(profile.schedule.start_time + horizon)?;
    let time_to_risk_s = match (crossing_s.shoulder, crossing_s.elbow) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(CellMetrics {
        crossing_s,
        time_to_risk_s,
        total_exponent: exponent.iter().map(|(_, v)| *v).sum(),
        increments: profile.increments(),
    })
}

fn compare(objective: Objective, a: &CellMetrics, b: &CellMetrics) -> Ordering {
    let by_exponent = a.total_exponent.total_cmp(&b.total_exponent);
    match objective {
        Objective::MaxTimeToRisk => {
            let ta = a.time_to_risk_s.unwrap_or(f64::INFINITY);
            let tb = b.time_to_risk_s.unwrap_or(f64::INFINITY);
            tb.total_cmp(&ta).then(by_exponent)
        }
        Objective::MinTotalExponent => by_exponent,
    }
}

pub fn sweep(base: &Scenario, grid: &SweepGrid) -> Vec<SweepRow> {
    let cells = expand(base, grid);
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|cell| evaluate(&cell.apply(base)).map_err(|e| e.to_string()))
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .into_iter()
        .zip(outcomes)
        .map(|(cell, outcome)| SweepRow {
            rank: None,
            cell,
            outcome,
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].outcome.is_ok()).collect();
    // stable: ties keep grid order
    order.sort_by(|&a, &b| match (&rows[a].outcome, &rows[b].outcome) {
        (Ok(x), Ok(y)) => compare(grid.objective, x, y),
        _ => Ordering::Equal,
    });
    for (rank, i) in order.into_iter().enumerate() {
        rows[i].rank = Some(rank + 1);
    }
    rows
}

/// Successful rows sorted from best to worst.
pub fn ranked(rows: &[SweepRow]) -> Vec<&SweepRow> {
    let mut out: Vec<&SweepRow> = rows.iter().filter(|r| r.rank.is_some()).collect();
    out.sort_by_key(|r| r.rank);
    out
}

pub const SWEEP_COLUMNS: [&str; 20] = [
    "rank",
    "cell",
    "status",
    "p0_x_m",
    "p0_z_m",
    "pf_x_m",
    "pf_z_m",
    "push_force_n",
    "pull_force_n",
    "t_push_s",
    "t_pull_s",
    "crossing_shoulder_s",
    "crossing_elbow_s",
    "time_to_risk_s",
    "total_exponent",
    "increment_shoulder_flexor",
    "increment_shoulder_extensor",
    "increment_elbow_flexor",
    "increment_elbow_extensor",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for row in rows {
        let c = &row.cell;
        let mut rec = vec![
            opt(row.rank.map(|r| r as f64)),
            c.index.to_string(),
            if row.outcome.is_ok() { "ok" } else { "failed" }.to_string(),
        ];
        rec.extend(
            [
                c.endpoints.p0_m[0],
                c.endpoints.p0_m[1],
                c.endpoints.pf_m[0],
                c.endpoints.pf_m[1],
                c.push_force_n,
                c.pull_force_n,
                c.t_push_s,
                c.t_pull_s,
            ]
            .iter()
            .map(|v| v.to_string()),
        );
        match &row.outcome {
            Ok(m) => {
                rec.push(opt(m.crossing_s.shoulder));
                rec.push(opt(m.crossing_s.elbow));
                rec.push(opt(m.time_to_risk_s));
                rec.push(m.total_exponent.to_string());
                rec.extend(MuscleGroup::ALL.iter().map(|&g| m.increments[g].to_string()));
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;

    fn base() -> Scenario {
        let mut s = load_scenario(include_str!("../../../scenarios/task1.json")).unwrap();
        s.run.duration_s = 600.0;
        s
    }

    #[test]
    fn expansion_order_and_defaults() {
        let grid = SweepGrid {
            push_force_n: vec![10.0, 20.0],
            t_pull_s: vec![4.0, 5.0, 6.0],
            ..Default::default()
        };
        let cells = expand(&base(), &grid);
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0].push_force_n, 10.0);
        assert_eq!(cells[2].t_pull_s, 6.0);
        assert_eq!(cells[3].push_force_n, 20.0);
        assert!(cells
            .iter()
            .all(|c| c.pull_force_n == 10.0 && c.endpoints.p0_m == [0.4, 0.1]));
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(load_grid("{}"), Err(Error::Validation { .. })));
        assert!(matches!(load_grid(r#"{"foo": []}"#), Err(Error::Schema(_))));
        assert!(matches!(load_grid(r#"{"endpoints": ["#), Err(Error::Parse(_))));
    }

    #[test]
    fn failing_cell_is_isolated() {
        let grid = SweepGrid {
            endpoints: vec![
                Endpoints {
                    p0_m: [0.4, 0.1],
                    pf_m: [1.0, 0.5],
                },
                Endpoints {
                    p0_m: [0.4, 0.1],
                    pf_m: [0.6, 0.1],
                },
            ],
            ..Default::default()
        };
        let rows = sweep(&base(), &grid);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].outcome.is_err());
        assert_eq!(rows[0].rank, None);
        assert_eq!(rows[1].rank, Some(1));
        assert_eq!(ranked(&rows)[0].cell.index, 1);

        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with(",0,failed,"));
    }

    #[test]
    fn min_total_exponent_prefers_lighter_load() {
        let grid = SweepGrid {
            push_force_n: vec![30.0, 5.0],
            objective: Objective::MinTotalExponent,
            ..Default::default()
        };
        let rows = sweep(&base(), &grid);
        assert_eq!(ranked(&rows)[0].cell.push_force_n, 5.0);
        assert_eq!(rows[1].rank, Some(1));
    }
}
