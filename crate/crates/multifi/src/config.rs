//! Pipeline configuration file. Precedence is flags, then file, then
//! defaults; the resolved value is echoed into every output directory.

use std::path::Path;

use multifi_core::backends::VehicleParams;
use multifi_core::cosim::RunConfig;
use multifi_core::evaluation::HeatmapMetric;
use multifi_core::scenario::{GridSpec, ScenarioTemplate};
use serde::{Deserialize, Serialize};

use crate::formats::read_json;
use crate::{Error, Result};

/// What the lateral displacement of a high-fidelity run is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// The low-fidelity run of the same scenario.
    #[default]
    Lofi,
    /// The states the high-fidelity run itself planned one step earlier.
    Planned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub metric: HeatmapMetric,
    pub reference: Reference,
    /// Report negative turn angles as a separate |γ| table.
    pub fold_negative: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            metric: HeatmapMetric::Max,
            reference: Reference::Lofi,
            fold_negative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Empty means every catalog entry.
    pub models: Vec<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            models: vec!["touring".into(), "offroad".into(), "citycar".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: GridSpec,
    pub template: ScenarioTemplate,
    pub run: RunConfig,
    /// Upserted into `run.catalog` when the config is resolved.
    pub vehicles: Vec<VehicleParams>,
    pub workers: usize,
    pub evaluation: EvaluationConfig,
    pub study: StudyConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default_grid(),
            template: ScenarioTemplate::default(),
            run: RunConfig::default(),
            vehicles: Vec::new(),
            workers: 1,
            evaluation: EvaluationConfig::default(),
            study: StudyConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Folds vehicle overrides into the catalog and validates everything.
    pub fn resolve(mut self) -> Result<Self> {
        for v in std::mem::take(&mut self.vehicles) {
            self.run.catalog.upsert(v)?;
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be >= 1"));
        }
        self.run.validate()?;
        for m in &self.study.models {
            self.run.catalog.get(m)?;
        }
        self.run.catalog.get(&self.template.vehicle_model)?;
        if !self.run.planner_sets.contains_key(&self.template.planner_config) {
            return Err(multifi_core::Error::UnknownPlannerConfig(self.template.planner_config.clone()).into());
        }
        Ok(self)
    }
}
