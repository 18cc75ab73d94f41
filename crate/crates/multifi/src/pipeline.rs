//! The batch pipeline behind each subcommand. Output layout under the root:
//! `scenarios/`, `runs/<backend>/`, `reports/`, `manifest.json` and
//! `effective_config.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use multifi_core::backends::Fidelity;
use multifi_core::cosim::{RunConfig, RunLog};
use multifi_core::evaluation::{
    aggregate_grid, compare_planned_executed, compare_runs, ErrorMetrics, GridHeatmaps, GridKey, MetricAggregates,
};
use multifi_core::geometry::Point2;
use multifi_core::scenario::{generate_grid, Angle, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::batch::{run_batch, BatchOutput, BatchReport, RunStatus};
use crate::config::{PipelineConfig, Reference};
use crate::formats::{
    load_run_log, load_scenario, run_log_csv, run_log_file_stem, save_run_log, save_scenario, to_json, write_json,
    write_text,
};
use crate::report::{self, Comparison};
use crate::{Error, Result};

pub const BATCH_REPORT_FILE: &str = "batch_report.json";

/// Paths of the output layout.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn scenarios(&self) -> PathBuf {
        self.root.join("scenarios")
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn runs_for(&self, backend: Fidelity) -> PathBuf {
        self.runs().join(backend.as_str())
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn grid_reports(&self) -> PathBuf {
        self.reports().join("grid")
    }

    pub fn study_reports(&self) -> PathBuf {
        self.reports().join("vehicle_study")
    }
}

fn is_nonempty_dir(path: &Path) -> Result<bool> {
    match fs::read_dir(path) {
        Ok(mut it) => Ok(it.next().is_some()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Ensures `dir` exists and is empty: refuses existing content unless
/// `force`, which removes it.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if is_nonempty_dir(dir)? {
        if !force {
            return Err(Error::Refused(dir.to_path_buf()));
        }
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// JSON files of a directory in name order.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "json") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Writes the grid scenarios to `scenarios/<scenario_id>.json`.
pub fn generate(cfg: &PipelineConfig, layout: &Layout, force: bool) -> Result<Vec<Scenario>> {
    let scenarios = generate_grid(&cfg.grid, &cfg.template)?;
    let dir = layout.scenarios();
    prepare_dir(&dir, force)?;
    for s in &scenarios {
        save_scenario(s, &dir.join(format!("{}.json", s.scenario_id)))?;
    }
    Ok(scenarios)
}

/// A scenario file, or every `*.json` of a directory.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let files = if path.is_dir() {
        json_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::config(
            "scenarios",
            format!("no scenario files in `{}`", path.display()),
        ));
    }
    files.iter().map(|f| load_scenario(f)).collect()
}

/// Runs every scenario on each backend and writes `runs/<backend>/<stem>.json`
/// and `.csv`, the batch index and the runtime table.
pub fn run(
    cfg: &PipelineConfig,
    scenarios: &[Scenario],
    backends: &[Fidelity],
    layout: &Layout,
    force: bool,
) -> Result<BatchOutput> {
    let configs: Vec<RunConfig> = backends
        .iter()
        .map(|b| RunConfig {
            backend: *b,
            ..cfg.run.clone()
        })
        .collect();
    for b in backends {
        prepare_dir(&layout.runs_for(*b), force)?;
    }
    let out = run_batch(scenarios, &configs, cfg.workers)?;
    for log in out.logs.iter().flatten() {
        let dir = layout.runs_for(log.backend);
        let stem = run_log_file_stem(log);
        save_run_log(log, &dir.join(format!("{stem}.json")))?;
        write_text(&dir.join(format!("{stem}.csv")), &run_log_csv(log))?;
    }
    write_json(&layout.runs().join(BATCH_REPORT_FILE), &out.report)?;
    write_text(&layout.reports().join("runtime.txt"), &out.report.runtime_table())?;
    Ok(out)
}

/// Inverse of `grid_scenario_id`; `None` for ids outside the grid naming.
pub fn parse_grid_id(id: &str) -> Option<GridKey> {
    if id == "straight" {
        return Some(GridKey {
            radius: None,
            angle: Angle::ZERO,
        });
    }
    let (r, g) = id.strip_prefix('r')?.split_once("_g")?;
    let radius: f64 = r.parse().ok()?;
    let (sign, mag) = match g.as_bytes().first()? {
        b'+' => (1.0, &g[1..]),
        b'-' => (-1.0, &g[1..]),
        _ => return None,
    };
    let angle: f64 = mag.parse().ok()?;
    Some(GridKey {
        radius: Some(radius),
        angle: Angle::from_degrees(sign * angle),
    })
}

fn path_of(log: &RunLog, agent_id: u32) -> Vec<Point2> {
    log.executed(agent_id)
        .iter()
        .map(|(_, s)| Point2::new(s.x, s.y))
        .collect()
}

fn planned_path(log: &RunLog, agent_id: u32) -> Vec<Point2> {
    log.planned_vs_executed(agent_id)
        .iter()
        .map(|(_, p, _)| Point2::new(p.x, p.y))
        .collect()
}

fn load_logs(dir: &Path) -> Result<BTreeMap<String, RunLog>> {
    let mut out = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for f in json_files(dir)? {
        let log = load_run_log(&f)?;
        out.insert(log.scenario_id.clone(), log);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario_id: String,
    pub agent_id: u32,
    pub aggregates: MetricAggregates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub reference: Reference,
    pub metrics: Vec<ScenarioMetrics>,
    /// Scenarios that could not be compared, with the reason.
    pub gaps: Vec<(String, String)>,
    pub heatmaps: Option<GridHeatmaps>,
}

impl CompareSummary {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "compared {} scenarios against the {} reference",
            self.metrics.len(),
            match self.reference {
                Reference::Lofi => "low-fidelity",
                Reference::Planned => "planned",
            }
        );
        let _ = writeln!(
            out,
            "\n{:<16}{:>12}{:>12}{:>12}{:>12}",
            "scenario", "max|d| [m]", "mean|d| [m]", "rmse_pos", "rmse_v"
        );
        for m in &self.metrics {
            let a = &m.aggregates;
            let _ = writeln!(
                out,
                "{:<16}{:>12.4}{:>12.4}{:>12.4}{:>12.4}",
                m.scenario_id, a.max_abs_d, a.mean_abs_d, a.rmse_pos, a.rmse_v
            );
        }
        let _ = writeln!(out, "\ngaps ({}):", self.gaps.len());
        for (id, why) in &self.gaps {
            let _ = writeln!(out, "  {id}: {why}");
        }
        out
    }
}

/// Compares the high-fidelity runs under `runs/` against their reference
/// and writes per-scenario artifacts and heatmaps to `reports/grid/`.
pub fn compare(cfg: &PipelineConfig, layout: &Layout, force: bool) -> Result<CompareSummary> {
    let low = load_logs(&layout.runs_for(Fidelity::Low))?;
    let high = load_logs(&layout.runs_for(Fidelity::High))?;
    let batch: Option<BatchReport> = {
        let p = layout.runs().join(BATCH_REPORT_FILE);
        p.is_file().then(|| crate::formats::read_json(&p)).transpose()?
    };
    if low.is_empty() && high.is_empty() && batch.is_none() {
        return Err(Error::config(
            "runs",
            format!("no run logs under `{}`", layout.runs().display()),
        ));
    }
    let dir = layout.grid_reports();
    prepare_dir(&dir, force)?;

    let mut ids: BTreeSet<String> = low.keys().chain(high.keys()).cloned().collect();
    if let Some(b) = &batch {
        ids.extend(b.runs.iter().map(|r| r.scenario_id.clone()));
    }
    let reference = cfg.evaluation.reference;
    let mut metrics = Vec::new();
    let mut gaps = Vec::new();
    let mut grid: Vec<(GridKey, Option<MetricAggregates>)> = Vec::new();
    for id in &ids {
        let scenario = load_scenario(&layout.scenarios().join(format!("{id}.json"))).ok();
        let result = compare_one(id, reference, low.get(id), high.get(id), scenario.as_ref(), &dir);
        let agg = match result {
            Ok(m) => {
                let a = m.aggregates;
                metrics.push(m);
                Some(a)
            }
            Err(why) => {
                gaps.push((id.clone(), why));
                None
            }
        };
        if let Some(key) = parse_grid_id(id) {
            grid.push((key, agg));
        }
    }
    let heatmaps = if grid.is_empty() {
        None
    } else {
        let h = aggregate_grid(&grid, cfg.evaluation.metric, cfg.evaluation.fold_negative)?;
        report::write_heatmap(&dir, "heatmap", &h.main)?;
        if let Some(n) = &h.negative {
            report::write_heatmap(&dir, "heatmap_negative", n)?;
        }
        Some(h)
    };
    let summary = CompareSummary {
        reference,
        metrics,
        gaps,
        heatmaps,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_text(&dir.join("compare.txt"), &summary.text())?;
    Ok(summary)
}

fn compare_one(
    id: &str,
    reference: Reference,
    low: Option<&RunLog>,
    high: Option<&RunLog>,
    scenario: Option<&Scenario>,
    dir: &Path,
) -> std::result::Result<ScenarioMetrics, String> {
    let high = high.ok_or("missing high-fidelity run")?;
    let agent_id = *high.vehicle_models.keys().next().ok_or("run has no agents")?;
    let (metrics, ref_path, ref_label) = match reference {
        Reference::Lofi => {
            let low = low.ok_or("missing low-fidelity run")?;
            let m = compare_runs(low, high, agent_id).map_err(|e| e.to_string())?;
            (m, path_of(low, agent_id), "low-fidelity")
        }
        Reference::Planned => {
            let m = compare_planned_executed(high, agent_id).map_err(|e| e.to_string())?;
            (m, planned_path(high, agent_id), "planned")
        }
    };
    let lanelets = scenario.map(|s| s.lanelets.as_slice()).unwrap_or(&[]);
    let stem = run_log_file_stem(high);
    report::write_comparison(
        dir,
        &Comparison {
            stem: &stem,
            lanelets,
            reference_label: ref_label,
            comparison_label: "high-fidelity",
            reference_path: &ref_path,
            comparison_path: &path_of(high, agent_id),
            metrics: &metrics,
        },
    )
    .map_err(|e| e.to_string())?;
    Ok(ScenarioMetrics {
        scenario_id: id.to_string(),
        agent_id,
        aggregates: metrics.aggregates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    pub aggregates: MetricAggregates,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub scenario_id: String,
    /// Descending max |d|.
    pub ranking: Vec<ModelResult>,
}

impl StudySummary {
    pub fn get(&self, model: &str) -> Option<&ModelResult> {
        self.ranking.iter().find(|r| r.model == model)
    }

    pub fn text(&self) -> String {
        let mut out = format!("vehicle study on `{}` (high vs low fidelity)\n\n", self.scenario_id);
        let _ = writeln!(
            out,
            "{:<6}{:<12}{:>12}{:>12}{:>12}{:>11}",
            "rank", "model", "max|d| [m]", "mean|d| [m]", "rmse_v", "fallbacks"
        );
        for (i, r) in self.ranking.iter().enumerate() {
            let a = &r.aggregates;
            let _ = writeln!(
                out,
                "{:<6}{:<12}{:>12.4}{:>12.4}{:>12.4}{:>11}",
                i + 1,
                r.model,
                a.max_abs_d,
                a.mean_abs_d,
                a.rmse_v,
                r.fallbacks
            );
        }
        out
    }
}

/// Runs `base` once per vehicle model on both backends and ranks the models
/// by lateral deviation. Writes `reports/vehicle_study/`.
pub fn study_vehicles(cfg: &PipelineConfig, base: &Scenario, layout: &Layout, force: bool) -> Result<StudySummary> {
    let models: Vec<String> = if cfg.study.models.is_empty() {
        cfg.run.catalog.ids()
    } else {
        cfg.study.models.clone()
    };
    for m in &models {
        cfg.run.catalog.get(m)?;
    }
    let dir = layout.study_reports();
    prepare_dir(&dir, force)?;
    let variants: Vec<Scenario> = models
        .iter()
        .map(|m| {
            let mut s = base.clone();
            s.scenario_id = format!("{}_{m}", base.scenario_id);
            for a in &mut s.agents {
                a.vehicle_model = m.clone();
            }
            s
        })
        .collect();
    let configs = [Fidelity::Low, Fidelity::High].map(|b| RunConfig {
        backend: b,
        ..cfg.run.clone()
    });
    let out = run_batch(&variants, &configs, cfg.workers)?;
    let mut by_key: BTreeMap<(String, Fidelity), RunLog> = BTreeMap::new();
    for log in out.logs.into_iter().flatten() {
        save_run_log(
            &log,
            &dir.join("runs").join(format!("{}.json", run_log_file_stem(&log))),
        )?;
        by_key.insert((log.scenario_id.clone(), log.backend), log);
    }
    let mut results: Vec<(String, ErrorMetrics, RunLog, RunLog)> = Vec::new();
    for (m, s) in models.iter().zip(&variants) {
        let low = by_key.remove(&(s.scenario_id.clone(), Fidelity::Low));
        let high = by_key.remove(&(s.scenario_id.clone(), Fidelity::High));
        let (Some(low), Some(high)) = (low, high) else {
            let why = out
                .report
                .runs
                .iter()
                .find(|r| r.scenario_id == s.scenario_id && r.status == RunStatus::Failed)
                .and_then(|r| r.detail.clone())
                .unwrap_or_else(|| "run missing".into());
            return Err(Error::config("study", format!("model `{m}`: {why}")));
        };
        let agent_id = *high.vehicle_models.keys().next().expect("scenario has agents");
        let metrics = compare_runs(&low, &high, agent_id)?;
        report::write_comparison(
            &dir,
            &Comparison {
                stem: &run_log_file_stem(&high),
                lanelets: &s.lanelets,
                reference_label: "low-fidelity",
                comparison_label: m,
                reference_path: &path_of(&low, agent_id),
                comparison_path: &path_of(&high, agent_id),
                metrics: &metrics,
            },
        )?;
        results.push((m.clone(), metrics, low, high));
    }

    let series: Vec<(&str, &ErrorMetrics)> = results.iter().map(|(m, e, _, _)| (m.as_str(), e)).collect();
    write_text(
        &dir.join("displacement.csv"),
        &report::labelled_displacement_csv(&series),
    )?;
    write_text(&dir.join("velocity.csv"), &report::labelled_velocity_csv(&series))?;
    let (d_svg, v_svg) = report::multi_series_plots(&base.scenario_id, &series);
    write_text(&dir.join("displacement.svg"), &d_svg)?;
    write_text(&dir.join("velocity.svg"), &v_svg)?;
    if let Some((_, _, low, _)) = results.first() {
        let agent_id = *low.vehicle_models.keys().next().expect("scenario has agents");
        let paths: Vec<(String, Vec<Point2>)> = std::iter::once(("low-fidelity".to_string(), path_of(low, agent_id)))
            .chain(results.iter().map(|(m, _, _, h)| (m.clone(), path_of(h, agent_id))))
            .collect();
        let refs: Vec<(&str, &[Point2])> = paths.iter().map(|(l, p)| (l.as_str(), p.as_slice())).collect();
        write_text(
            &dir.join("plot.svg"),
            &crate::svg::scenario_plot(&base.scenario_id, &base.lanelets, &refs),
        )?;
    }

    let mut ranking: Vec<ModelResult> = results
        .iter()
        .map(|(m, e, _, h)| ModelResult {
            model: m.clone(),
            aggregates: e.aggregates,
            fallbacks: h.fallback_count(),
        })
        .collect();
    ranking.sort_by(|a, b| b.aggregates.max_abs_d.total_cmp(&a.aggregates.max_abs_d));
    let summary = StudySummary {
        scenario_id: base.scenario_id.clone(),
        ranking,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_text(&dir.join("ranking.txt"), &summary.text())?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct DemoSummary {
    pub scenarios: usize,
    pub batch: BatchReport,
    pub compare: CompareSummary,
    pub study: StudySummary,
}

/// Grid generation, both backends, comparison, vehicle study and runtime
/// table in one go.
pub fn demo(cfg: &PipelineConfig, study_scenario: &Scenario, layout: &Layout, force: bool) -> Result<DemoSummary> {
    let scenarios = generate(cfg, layout, force)?;
    let batch = run(cfg, &scenarios, &[Fidelity::Low, Fidelity::High], layout, force)?;
    let compare = compare(cfg, layout, force)?;
    let study = study_vehicles(cfg, study_scenario, layout, force)?;
    Ok(DemoSummary {
        scenarios: scenarios.len(),
        batch: batch.report,
        compare,
        study,
    })
}

/// Provenance record of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// SHA-256 of `effective_config.json`.
    pub config_sha256: String,
    pub started_at: String,
    pub finished_at: String,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes `effective_config.json` and `manifest.json` into the root.
pub fn write_provenance(
    layout: &Layout,
    cfg: &PipelineConfig,
    subcommand: &str,
    parameters: BTreeMap<String, String>,
    config_path: Option<&Path>,
    started_at: String,
) -> Result<Manifest> {
    let text = to_json(cfg);
    write_text(&layout.root.join("effective_config.json"), &text)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        parameters,
        config_path: config_path.map(Path::to_path_buf),
        output_dir: layout.root.clone(),
        config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        started_at,
        finished_at: timestamp(),
    };
    write_json(&layout.root.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
