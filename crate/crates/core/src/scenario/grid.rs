use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{build_turn_road, default_max_steps, AgentSpec, Angle, GoalRegion, LaneletSpec, Pose2, RoadSpec, Scenario};
use crate::{Error, Result};

/// Everything about a generated scenario that is not a search variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioTemplate {
    /// Radius and turn angle are overwritten per grid cell.
    pub road: RoadSpec,
    pub initial_s: f64,
    pub initial_lateral_offset: f64,
    pub initial_speed: f64,
    pub vehicle_model: String,
    pub planner_config: String,
    pub dt_plan: f64,
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        Self {
            road: RoadSpec::default(),
            initial_s: 0.0,
            initial_lateral_offset: 0.0,
            initial_speed: 0.0,
            vehicle_model: "touring".into(),
            planner_config: "default".into(),
            dt_plan: 0.1,
        }
    }
}

/// Search space of the turn-geometry grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radii: Vec<f64>,
    pub angles: Vec<Angle>,
    /// Keep one γ = 0 scenario per radius instead of a single straight one.
    #[serde(default)]
    pub straight_per_radius: bool,
}

impl GridSpec {
    /// 6 radii × {±30°, ±60°, ±90°, ±120°} plus one straight: 49 scenarios.
    pub fn default_grid() -> Self {
        let mut angles = Vec::new();
        for a in [30.0, 60.0, 90.0, 120.0] {
            angles.push(Angle::from_degrees(-a));
            angles.push(Angle::from_degrees(a));
        }
        angles.push(Angle::ZERO);
        Self {
            radii: alloc::vec![10.0, 15.0, 20.0, 30.0, 50.0, 80.0],
            angles,
            straight_per_radius: false,
        }
    }

    /// 6 radii × 13 angles from −120° to +120° in 20° steps, γ = 0 kept per
    /// radius: 78 scenarios.
    pub fn full_study() -> Self {
        Self {
            radii: alloc::vec![10.0, 15.0, 20.0, 30.0, 50.0, 80.0],
            angles: (-6..=6).map(|k| Angle::from_degrees(20.0 * k as f64)).collect(),
            straight_per_radius: true,
        }
    }
}

/// Deterministic identifier for a grid cell.
pub fn grid_scenario_id(radius: Option<f64>, angle: Angle) -> String {
    match radius {
        None => String::from("straight"),
        Some(r) => {
            let a = angle.degrees();
            let sign = if a < 0.0 { '-' } else { '+' };
            format!("r{}_g{}{}", r, sign, a.abs())
        }
    }
}

/// One scenario per (radius, angle) pair. With `straight_per_radius` unset,
/// all γ = 0 cells collapse into a single `straight` scenario.
pub fn generate_grid(grid: &GridSpec, template: &ScenarioTemplate) -> Result<Vec<Scenario>> {
    if grid.radii.is_empty() {
        return Err(Error::invalid("radii", "must not be empty"));
    }
    if grid.angles.is_empty() {
        return Err(Error::invalid("angles", "must not be empty"));
    }
    template.road.validate()?;
    let mut cells: Vec<(Option<f64>, Angle)> = Vec::new();
    let mut straight_done = false;
    for &r in &grid.radii {
        for &a in &grid.angles {
            if a.is_zero() && !grid.straight_per_radius {
                if !straight_done {
                    cells.push((None, Angle::ZERO));
                    straight_done = true;
                }
            } else {
                cells.push((Some(r), a));
            }
        }
    }
    let mut out = Vec::with_capacity(cells.len());
    let mut seen = alloc::collections::BTreeSet::new();
    for (radius, angle) in cells {
        let id = grid_scenario_id(radius, angle);
        if !seen.insert(id.clone()) {
            continue;
        }
        let road = RoadSpec {
            radius: radius.or(if angle.is_zero() { None } else { template.road.radius }),
            turn_angle: angle,
            ..template.road.clone()
        };
        let lanelet = build_turn_road(&road)?;
        let goal = GoalRegion::near_end_of(&lanelet);
        let agent = AgentSpec {
            agent_id: 1,
            lanelet: 0,
            initial_s: template.initial_s,
            initial_lateral_offset: template.initial_lateral_offset,
            initial_speed: template.initial_speed,
            vehicle_model: template.vehicle_model.clone(),
            goal,
            planner_config: template.planner_config.clone(),
        };
        let max_steps = default_max_steps(road.total_length(), template.dt_plan);
        out.push(Scenario::new(
            id,
            alloc::vec![LaneletSpec {
                origin: Pose2::default(),
                road,
            }],
            alloc::vec![agent],
            template.dt_plan,
            max_steps,
        )?);
    }
    Ok(out)
}
