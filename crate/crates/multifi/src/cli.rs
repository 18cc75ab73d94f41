//! Command-line front end. Flags override the config file, which overrides
//! built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use multifi_core::backends::Fidelity;
use multifi_core::evaluation::HeatmapMetric;
use multifi_core::scenario::{s_curve_study, Angle, GridSpec, Scenario};

use crate::config::{PipelineConfig, Reference};
use crate::formats::{apply_catalog_file, catalog_to_string, load_scenario};
use crate::pipeline::{self, Layout};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "multifi",
    version,
    about = "Multi-fidelity co-simulation of a sampling motion planner"
)]
pub struct Cli {
    /// Pipeline configuration file (JSON). Flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory holding scenarios/, runs/, reports/ and the manifest.
    #[arg(long, short, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,
    /// Replace existing outputs instead of refusing.
    #[arg(long, global = true)]
    pub force: bool,
    /// Vehicle catalog file whose entries override or extend the built-in models.
    #[arg(long, global = true, value_name = "FILE")]
    pub vehicles: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the scenario library for a turn-geometry grid into scenarios/.
    Generate(GenerateArgs),
    /// Run scenarios on one or both backends into runs/<backend>/.
    Run(RunArgs),
    /// Compare high- against low-fidelity runs and render heatmaps into reports/grid/.
    Compare(CompareArgs),
    /// Run one scenario with each vehicle model and rank the deviations.
    StudyVehicles(StudyArgs),
    /// Full study: 78-scenario grid on both backends, comparison, vehicle study, runtime table.
    Demo(DemoArgs),
    /// Print the effective vehicle catalog as JSON.
    Catalog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 6 radii x {±30, ±60, ±90, ±120} degrees plus one straight road: 49 scenarios.
    Default,
    /// 6 radii x 13 angles from -120 to 120 degrees: 78 scenarios.
    Full,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Grid preset; replaces the config file's grid.
    #[arg(long, value_enum, conflicts_with_all = ["radius", "angle"])]
    pub preset: Option<Preset>,
    /// Single scenario radius in metres (requires --angle).
    #[arg(long, requires = "angle")]
    pub radius: Option<f64>,
    /// Single scenario turn angle in degrees, positive to the left (requires --radius).
    #[arg(long, requires = "radius", allow_hyphen_values = true)]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Low,
    High,
    Both,
}

impl BackendChoice {
    fn backends(self) -> Vec<Fidelity> {
        match self {
            BackendChoice::Low => vec![Fidelity::Low],
            BackendChoice::High => vec![Fidelity::High],
            BackendChoice::Both => vec![Fidelity::Low, Fidelity::High],
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file or directory; defaults to <out>/scenarios.
    #[arg(long, value_name = "PATH")]
    pub scenarios: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub backend: BackendChoice,
    /// Concurrent runs.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Planning step in seconds; defaults to each scenario's value.
    #[arg(long)]
    pub dt_plan: Option<f64>,
    /// Integration substeps per planning step (high fidelity).
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Step budget; defaults to each scenario's value.
    #[arg(long)]
    pub max_steps: Option<u32>,
    /// Seed of the optional acceleration noise.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Heatmap aggregate: max or mean |d|.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<HeatmapMetric>,
    /// Reference for the displacement of each high-fidelity run.
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    /// Report negative angles as a separate |γ| heatmap (true or false).
    #[arg(long, value_name = "BOOL")]
    pub fold_negative: Option<bool>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Scenario file; defaults to the built-in S-curve.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Comma-separated vehicle model ids; defaults to the config's list.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    /// Concurrent runs.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Concurrent runs.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_metric(s: &str) -> std::result::Result<HeatmapMetric, String> {
    s.parse()
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &cli.vehicles {
        apply_catalog_file(&mut cfg.run.catalog, p)?;
    }
    Ok(cfg)
}

fn single_cell(radius: f64, angle: f64) -> GridSpec {
    GridSpec {
        radii: vec![radius],
        angles: vec![Angle::from_degrees(angle)],
        straight_per_radius: true,
    }
}

fn study_scenario(path: Option<&Path>, cfg: &PipelineConfig) -> Result<Scenario> {
    match path {
        Some(p) => load_scenario(p),
        None => Ok(s_curve_study(cfg.run.dt_plan.unwrap_or(cfg.template.dt_plan))),
    }
}

fn param(map: &mut BTreeMap<String, String>, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        map.insert(key.into(), v.to_string());
    }
}

pub fn main_with_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::Usage(e.render().to_string().trim_end().to_string())),
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let started = pipeline::timestamp();
    let layout = Layout::new(&cli.out);
    let mut cfg = load_config(cli)?;
    let mut params = BTreeMap::new();
    params.insert("out".into(), cli.out.display().to_string());
    params.insert("force".into(), cli.force.to_string());
    param(&mut params, "vehicles", cli.vehicles.as_ref().map(|p| p.display()));
    match &cli.command {
        Command::Generate(a) => {
            match (a.preset, a.radius, a.angle) {
                (Some(Preset::Default), _, _) => cfg.grid = GridSpec::default_grid(),
                (Some(Preset::Full), _, _) => cfg.grid = GridSpec::full_study(),
                (None, Some(r), Some(g)) => cfg.grid = single_cell(r, g),
                _ => {}
            }
            param(&mut params, "preset", a.preset.map(|p| format!("{p:?}")));
            param(&mut params, "radius", a.radius);
            param(&mut params, "angle", a.angle);
            let cfg = cfg.resolve()?;
            let scenarios = pipeline::generate(&cfg, &layout, cli.force)?;
            println!("{} scenarios", scenarios.len());
            println!("wrote {}", layout.scenarios().display());
            finish(cli, &layout, &cfg, "generate", params, started)
        }
        Command::Run(a) => {
            if let Some(w) = a.workers {
                cfg.workers = w;
            }
            if a.dt_plan.is_some() {
                cfg.run.dt_plan = a.dt_plan;
            }
            if let Some(s) = a.substeps {
                cfg.run.substeps = s;
            }
            if a.max_steps.is_some() {
                cfg.run.max_steps = a.max_steps;
            }
            if let Some(s) = a.seed {
                cfg.run.seed = s;
            }
            let source = a.scenarios.clone().unwrap_or_else(|| layout.scenarios());
            param(&mut params, "scenarios", Some(source.display()));
            param(&mut params, "backend", Some(format!("{:?}", a.backend).to_lowercase()));
            param(&mut params, "workers", a.workers);
            param(&mut params, "dt_plan", a.dt_plan);
            param(&mut params, "substeps", a.substeps);
            param(&mut params, "max_steps", a.max_steps);
            param(&mut params, "seed", a.seed);
            let cfg = cfg.resolve()?;
            let scenarios = pipeline::load_scenarios(&source)?;
            let out = pipeline::run(&cfg, &scenarios, &a.backend.backends(), &layout, cli.force)?;
            let r = &out.report;
            println!(
                "{} runs: {} ok, {} aborted, {} failed",
                r.runs.len(),
                r.count(crate::batch::RunStatus::Ok),
                r.count(crate::batch::RunStatus::Aborted),
                r.count(crate::batch::RunStatus::Failed)
            );
            for e in r.runs.iter().filter(|e| e.status != crate::batch::RunStatus::Ok) {
                println!(
                    "  {} [{}] {:?}: {}",
                    e.scenario_id,
                    e.backend,
                    e.status,
                    e.detail.as_deref().unwrap_or("")
                );
            }
            print!("\n{}", r.runtime_table());
            finish(cli, &layout, &cfg, "run", params, started)
        }
        Command::Compare(a) => {
            if let Some(m) = a.metric {
                cfg.evaluation.metric = m;
            }
            if let Some(r) = a.reference {
                cfg.evaluation.reference = r;
            }
            if let Some(f) = a.fold_negative {
                cfg.evaluation.fold_negative = f;
            }
            param(&mut params, "metric", a.metric.map(|m| format!("{m:?}").to_lowercase()));
            param(
                &mut params,
                "reference",
                a.reference.map(|r| format!("{r:?}").to_lowercase()),
            );
            param(&mut params, "fold_negative", a.fold_negative);
            let cfg = cfg.resolve()?;
            let summary = pipeline::compare(&cfg, &layout, cli.force)?;
            print!("{}", summary.text());
            println!("wrote {}", layout.grid_reports().display());
            finish(cli, &layout, &cfg, "compare", params, started)
        }
        Command::StudyVehicles(a) => {
            if !a.models.is_empty() {
                cfg.study.models = a.models.clone();
            }
            if let Some(w) = a.workers {
                cfg.workers = w;
            }
            param(&mut params, "scenario", a.scenario.as_ref().map(|p| p.display()));
            param(
                &mut params,
                "models",
                (!a.models.is_empty()).then(|| a.models.join(",")),
            );
            param(&mut params, "workers", a.workers);
            let cfg = cfg.resolve()?;
            let base = study_scenario(a.scenario.as_deref(), &cfg)?;
            let summary = pipeline::study_vehicles(&cfg, &base, &layout, cli.force)?;
            print!("{}", summary.text());
            println!("wrote {}", layout.study_reports().display());
            finish(cli, &layout, &cfg, "study-vehicles", params, started)
        }
        Command::Demo(a) => {
            cfg.grid = GridSpec::full_study();
            if let Some(w) = a.workers {
                cfg.workers = w;
            }
            param(&mut params, "workers", a.workers);
            let cfg = cfg.resolve()?;
            let base = study_scenario(None, &cfg)?;
            let d = pipeline::demo(&cfg, &base, &layout, cli.force)?;
            println!("{} scenarios", d.scenarios);
            println!(
                "{} runs, {} compared, {} gaps",
                d.batch.runs.len(),
                d.compare.metrics.len(),
                d.compare.gaps.len()
            );
            if let Some(h) = &d.compare.heatmaps {
                if let Some((r, g, v)) = h.main.argmax() {
                    println!(
                        "largest {:?} |d|: {v:.3} m at r = {r} m, γ = {g}°",
                        cfg.evaluation.metric
                    );
                }
            }
            print!("\n{}", d.study.text());
            print!("\n{}", d.batch.runtime_table());
            crate::formats::write_text(&layout.reports().join("runtime_table.txt"), &d.batch.runtime_table())?;
            finish(cli, &layout, &cfg, "demo", params, started)
        }
        Command::Catalog => {
            let cfg = cfg.resolve()?;
            print!("{}", catalog_to_string(&cfg.run.catalog));
            Ok(())
        }
    }
}

fn finish(
    cli: &Cli,
    layout: &Layout,
    cfg: &PipelineConfig,
    subcommand: &str,
    params: BTreeMap<String, String>,
    started: String,
) -> Result<()> {
    pipeline::write_provenance(layout, cfg, subcommand, params, cli.config.as_deref(), started)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_angles_parse() {
        let cli = Cli::try_parse_from(["multifi", "generate", "--radius", "10", "--angle", "-90"]).unwrap();
        match cli.command {
            Command::Generate(a) => assert_eq!(a.angle, Some(-90.0)),
            _ => unreachable!(),
        }
    }
}
