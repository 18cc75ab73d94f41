use std::path::Path;

use multifi_core::cosim::RunLog;
use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::{Error, Result};

/// `<scenario_id>__<backend>`, shared by every per-run artifact.
pub fn run_log_file_stem(log: &RunLog) -> String {
    format!("{}__{}", log.scenario_id, log.backend)
}

/// Compact JSON, one file per run.
pub fn save_run_log(log: &RunLog, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string(log).expect("run logs serialize");
    s.push('\n');
    write_text(path, &s)
}

pub fn load_run_log(path: &Path) -> Result<RunLog> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e.to_string()))
}

/// One agent at one step. `planned_*` is the state the previous cycle planned
/// for this time; at step 0 it is the first point of the initial plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub step: u32,
    pub t: f64,
    pub agent: u32,
    pub planned_x: f64,
    pub planned_y: f64,
    pub planned_theta: f64,
    pub planned_v: f64,
    pub executed_x: f64,
    pub executed_y: f64,
    pub executed_theta: f64,
    pub executed_v: f64,
    pub status: String,
}

pub fn step_rows(log: &RunLog) -> Vec<StepRow> {
    let mut rows = Vec::new();
    for (i, rec) in log.records.iter().enumerate() {
        for a in &rec.agents {
            let planned = if i == 0 {
                a.planned.first().copied()
            } else {
                log.records[i - 1]
                    .agent(a.agent_id)
                    .and_then(|p| p.planned.get(1).copied())
            };
            let (px, py, pt, pv) =
                planned.map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |p| (p.x, p.y, p.heading, p.v));
            rows.push(StepRow {
                step: rec.step_index,
                t: rec.t,
                agent: a.agent_id,
                planned_x: px,
                planned_y: py,
                planned_theta: pt,
                planned_v: pv,
                executed_x: a.state.x,
                executed_y: a.state.y,
                executed_theta: a.state.heading,
                executed_v: a.state.v,
                status: a.status.as_str().to_string(),
            });
        }
    }
    rows
}

/// Per-step CSV export of a run.
pub fn run_log_csv(log: &RunLog) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in step_rows(log) {
        w.serialize(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}
