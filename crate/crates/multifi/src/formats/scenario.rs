use std::path::Path;

use multifi_core::scenario::{AgentSpec, LaneletSpec, Pose2, RoadSpec, Scenario};
use serde::{Deserialize, Serialize};

use super::{check_version, read_text, write_text};
use crate::{Error, Result};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Unit labels written into every scenario file. Loading rejects anything else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Units {
    length: String,
    angle: String,
    time: String,
    speed: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "m".into(),
            angle: "deg".into(),
            time: "s".into(),
            speed: "m/s".into(),
        }
    }
}

fn is_origin(p: &Pose2) -> bool {
    *p == Pose2::default()
}

/// Lanelet 0 is `road` (placed at `road_origin`); further lanelets follow in
/// `extra_roads`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    format_version: u32,
    #[serde(default)]
    units: Units,
    scenario_id: String,
    road: RoadSpec,
    #[serde(default, skip_serializing_if = "is_origin")]
    road_origin: Pose2,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    extra_roads: Vec<LaneletSpec>,
    agents: Vec<AgentSpec>,
    dt_plan: f64,
    max_steps: u32,
}

pub fn scenario_to_string(s: &Scenario) -> String {
    let file = ScenarioFile {
        format_version: SCENARIO_FORMAT_VERSION,
        units: Units::default(),
        scenario_id: s.scenario_id.clone(),
        road: s.roads[0].road.clone(),
        road_origin: s.roads[0].origin,
        extra_roads: s.roads[1..].to_vec(),
        agents: s.agents.clone(),
        dt_plan: s.dt_plan,
        max_steps: s.max_steps,
    };
    super::to_json(&file)
}

/// Parses and validates a scenario; `origin` labels diagnostics.
pub fn scenario_from_str(text: &str, origin: &Path) -> Result<Scenario> {
    check_version(text, SCENARIO_FORMAT_VERSION).map_err(|m| Error::parse(origin, m))?;
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    if file.units != Units::default() {
        return Err(Error::parse(
            origin,
            "`units` must be {\"length\": \"m\", \"angle\": \"deg\", \"time\": \"s\", \"speed\": \"m/s\"}",
        ));
    }
    let mut roads = vec![LaneletSpec {
        origin: file.road_origin,
        road: file.road,
    }];
    roads.extend(file.extra_roads);
    Scenario::new(file.scenario_id, roads, file.agents, file.dt_plan, file.max_steps).map_err(|e| match e {
        multifi_core::Error::Validation { field, reason } => {
            Error::parse(origin, format!("invalid `{field}`: {reason}"))
        }
        other => Error::Core(other),
    })
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<()> {
    write_text(path, &scenario_to_string(s))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    scenario_from_str(&read_text(path)?, path)
}
