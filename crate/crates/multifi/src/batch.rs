//! Timed runs and the concurrent batch runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use multifi_core::backends::Fidelity;
use multifi_core::cosim::{run_scenario, RunConfig, RunLog, TerminationKind};
use multifi_core::evaluation::{runtime_stats, RuntimeStats};
use multifi_core::scenario::Scenario;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Runs a scenario and records the wall-clock time of the whole loop,
/// planning included.
pub fn timed_run(scenario: &Scenario, config: &RunConfig) -> multifi_core::Result<RunLog> {
    let start = Instant::now();
    let mut log = run_scenario(scenario, config)?;
    log.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Every agent terminated without a dynamics error.
    Ok,
    /// The run stopped on a dynamics error; the log is partial.
    Aborted,
    /// The run could not start; there is no log.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub scenario_id: String,
    pub backend: Fidelity,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Termination kind per agent id.
    pub terminations: BTreeMap<u32, TerminationKind>,
    pub fallbacks: usize,
    pub steps: usize,
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    /// Sorted by scenario id, then backend.
    pub runs: Vec<RunEntry>,
    /// Over runs with status `ok`; absent for a backend without any.
    pub timing: BTreeMap<Fidelity, RuntimeStats>,
}

impl BatchReport {
    pub fn count(&self, status: RunStatus) -> usize {
        self.runs.iter().filter(|r| r.status == status).count()
    }

    /// Runtime statistics in seconds, two decimals, one column per backend.
    pub fn runtime_table(&self) -> String {
        let backends: Vec<Fidelity> = self.timing.keys().copied().collect();
        let mut out = format!("{:<20}", "Statistic [s]");
        for b in &backends {
            let _ = write!(out, "{:>16}", format!("{b}-fidelity"));
        }
        out.push('\n');
        let rows: [(&str, fn(&RuntimeStats) -> f64); 5] = [
            ("Minimum", |s| s.min),
            ("Maximum", |s| s.max),
            ("Mean", |s| s.mean),
            ("Median", |s| s.median),
            ("Std. Deviation", |s| s.std),
        ];
        for (name, f) in rows {
            let _ = write!(out, "{name:<20}");
            for b in &backends {
                let _ = write!(out, "{:>16.2}", f(&self.timing[b]));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<20}", "Runs");
        for b in &backends {
            let _ = write!(out, "{:>16}", self.timing[b].count);
        }
        out.push('\n');
        out
    }
}

/// One batch result: the index plus the logs, aligned with `report.runs`
/// (`None` for failed runs).
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub report: BatchReport,
    pub logs: Vec<Option<RunLog>>,
}

fn entry(scenario: &Scenario, backend: Fidelity, result: &multifi_core::Result<RunLog>) -> RunEntry {
    match result {
        Ok(log) => {
            let aborted = log
                .terminations
                .iter()
                .find(|t| t.kind == TerminationKind::DynamicsError);
            RunEntry {
                scenario_id: scenario.scenario_id.clone(),
                backend,
                status: if aborted.is_some() {
                    RunStatus::Aborted
                } else {
                    RunStatus::Ok
                },
                detail: aborted.and_then(|t| t.detail.clone()),
                terminations: log.terminations.iter().map(|t| (t.agent_id, t.kind)).collect(),
                fallbacks: log.fallback_count(),
                steps: log.records.len(),
                wall_clock_seconds: Some(log.wall_clock_seconds),
            }
        }
        Err(e) => RunEntry {
            scenario_id: scenario.scenario_id.clone(),
            backend,
            status: RunStatus::Failed,
            detail: Some(e.to_string()),
            terminations: BTreeMap::new(),
            fallbacks: 0,
            steps: 0,
            wall_clock_seconds: None,
        },
    }
}

/// Runs every scenario under every config on `workers` threads. Individual
/// failures are recorded and do not stop the batch.
pub fn run_batch(scenarios: &[Scenario], configs: &[RunConfig], workers: usize) -> Result<BatchOutput> {
    if scenarios.is_empty() {
        return Err(Error::config("scenarios", "batch needs at least one scenario"));
    }
    if configs.is_empty() {
        return Err(Error::config("run", "batch needs at least one run config"));
    }
    if workers == 0 {
        return Err(Error::config("workers", "must be >= 1"));
    }
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(&Scenario, &RunConfig)> = scenarios
        .iter()
        .flat_map(|s| configs.iter().map(move |c| (s, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let results: Vec<(RunEntry, Option<RunLog>)> = pool.install(|| {
        jobs.par_iter()
            .map(|(s, c)| {
                let r = timed_run(s, c);
                (entry(s, c.backend, &r), r.ok())
            })
            .collect()
    });
    let mut results = results;
    results.sort_by(|a, b| (&a.0.scenario_id, a.0.backend).cmp(&(&b.0.scenario_id, b.0.backend)));

    let mut per_backend: BTreeMap<Fidelity, Vec<f64>> = BTreeMap::new();
    for (e, _) in &results {
        per_backend.entry(e.backend).or_default();
        if e.status == RunStatus::Ok {
            per_backend.get_mut(&e.backend).unwrap().extend(e.wall_clock_seconds);
        }
    }
    let timing = per_backend
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(b, v)| Ok((b, runtime_stats(&v)?)))
        .collect::<Result<_>>()?;
    let (runs, logs) = results.into_iter().unzip();
    Ok(BatchOutput {
        report: BatchReport { runs, timing },
        logs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use multifi_core::cosim::Termination;
    use multifi_core::scenario::s_curve_study;

    #[test]
    fn dynamics_errors_mark_the_run_aborted() {
        let sc = s_curve_study(0.1);
        let mut r = run_scenario(&sc, &RunConfig::default());
        let log = r.as_mut().unwrap();
        log.terminations = vec![Termination {
            agent_id: 1,
            kind: TerminationKind::DynamicsError,
            step_index: 3,
            t: 0.3,
            detail: Some("non-finite state".into()),
        }];
        let e = entry(&sc, Fidelity::High, &r);
        assert_eq!(e.status, RunStatus::Aborted);
        assert_eq!(e.detail.as_deref(), Some("non-finite state"));
        assert_eq!(e.terminations[&1], TerminationKind::DynamicsError);
    }
}
