//! Scenario data model, procedural turn roads and grid generation.

mod grid;
mod road;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backends::VehicleState;
use crate::geometry::Point2;
#[allow(unused_imports)]
use crate::math::Float;
use crate::{Error, Result};

pub use grid::{generate_grid, grid_scenario_id, GridSpec, ScenarioTemplate};
pub use road::{build_lanelet, build_turn_road, compile_centerline, Lanelet};

/// An angle stored in degrees, the unit used in scenario files and grid
/// presets. Keeping degrees canonical makes file round-trips exact.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub const fn from_degrees(degrees: f64) -> Self {
        Angle(degrees)
    }

    pub fn from_radians(radians: f64) -> Self {
        Angle(radians.to_degrees())
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl core::ops::Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(-self.0)
    }
}

/// One turn of a procedurally generated road: entry straight, circular arc,
/// exit straight. `then` appends further arc + straight sections, which is how
/// S-curves are described.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSpec {
    pub entry_length: f64,
    /// Absent for straight roads.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Signed; positive turns left.
    #[serde(default)]
    pub turn_angle: Angle,
    pub exit_length: f64,
    pub lane_width: f64,
    pub sample_step: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub then: Vec<TurnSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnSection {
    pub radius: f64,
    pub turn_angle: Angle,
    pub exit_length: f64,
}

impl Default for RoadSpec {
    fn default() -> Self {
        Self {
            entry_length: 40.0,
            radius: None,
            turn_angle: Angle::ZERO,
            exit_length: 40.0,
            lane_width: 3.5,
            sample_step: 0.5,
            then: Vec::new(),
        }
    }
}

impl RoadSpec {
    pub fn turn(radius: f64, turn_angle: Angle) -> Self {
        Self {
            radius: Some(radius),
            turn_angle,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if !v.is_finite() || v < 0.0 {
                Err(Error::invalid(name, format!("must be a finite length >= 0, got {v}")))
            } else {
                Ok(())
            }
        };
        finite_nonneg("entry_length", self.entry_length)?;
        finite_nonneg("exit_length", self.exit_length)?;
        if !(self.sample_step.is_finite() && self.sample_step > 0.0) {
            return Err(Error::invalid("sample_step", "must be > 0"));
        }
        if !(self.lane_width.is_finite() && (2.0..=6.0).contains(&self.lane_width)) {
            return Err(Error::invalid(
                "lane_width",
                format!("must lie in [2.0, 6.0] m, got {}", self.lane_width),
            ));
        }
        if !self.turn_angle.degrees().is_finite() {
            return Err(Error::invalid("turn_angle", "must be finite"));
        }
        match self.radius {
            Some(r) => self.validate_radius("radius", r)?,
            None if !self.turn_angle.is_zero() => {
                return Err(Error::invalid("radius", "required when turn_angle is non-zero"))
            }
            None => {}
        }
        for (i, sec) in self.then.iter().enumerate() {
            self.validate_radius(&format!("then[{i}].radius"), sec.radius)?;
            finite_nonneg(&format!("then[{i}].exit_length"), sec.exit_length)?;
            if !sec.turn_angle.degrees().is_finite() {
                return Err(Error::invalid(&format!("then[{i}].turn_angle"), "must be finite"));
            }
        }
        if self.total_length() <= 0.0 {
            return Err(Error::invalid("entry_length", "road has zero total length"));
        }
        Ok(())
    }

    fn validate_radius(&self, field: &str, r: f64) -> Result<()> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(field, format!("must be > 0, got {r}")));
        }
        if self.sample_step > r / 2.0 {
            return Err(Error::invalid(
                "sample_step",
                format!("must not exceed radius/2 = {}", r / 2.0),
            ));
        }
        Ok(())
    }

    /// Arc length of the first turn (zero on straights).
    pub fn arc_length(&self) -> f64 {
        match self.radius {
            Some(r) => r * self.turn_angle.radians().abs(),
            None => 0.0,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.entry_length
            + self.arc_length()
            + self.exit_length
            + self
                .then
                .iter()
                .map(|t| t.radius * t.turn_angle.radians().abs() + t.exit_length)
                .sum::<f64>()
    }
}

/// Planar pose used to place a lanelet's start.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneletSpec {
    #[serde(default)]
    pub origin: Pose2,
    pub road: RoadSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterlineSample {
    pub x: f64,
    pub y: f64,
    /// Continuous (unwrapped) heading in radians.
    pub heading: f64,
    pub curvature: f64,
    pub s: f64,
}

impl CenterlineSample {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Arclength-parameterized centerline. Values between samples are linearly
/// interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    samples: Vec<CenterlineSample>,
}

impl Centerline {
    pub fn new(samples: Vec<CenterlineSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Geometry("centerline needs at least two samples".into()));
        }
        if samples[0].s != 0.0 {
            return Err(Error::Geometry("centerline arclength must start at 0".into()));
        }
        if samples.windows(2).any(|w| w[1].s <= w[0].s) {
            return Err(Error::Geometry("centerline arclength must increase strictly".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[CenterlineSample] {
        &self.samples
    }

    pub fn length(&self) -> f64 {
        self.samples[self.samples.len() - 1].s
    }

    /// Index `i` of the interval `[s_i, s_{i+1}]` containing `s` (clamped).
    pub fn segment_index(&self, s: f64) -> usize {
        let n = self.samples.len();
        match self.samples.binary_search_by(|p| p.s.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Linearly interpolated sample at `s`, clamped to the centerline range.
    pub fn interpolate(&self, s: f64) -> CenterlineSample {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let u = (s - a.s) / (b.s - a.s);
        CenterlineSample {
            x: a.x + u * (b.x - a.x),
            y: a.y + u * (b.y - a.y),
            heading: a.heading + u * (b.heading - a.heading),
            curvature: a.curvature + u * (b.curvature - a.curvature),
            s,
        }
    }
}

/// Goal area: a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: Point2,
    pub radius: f64,
}

impl GoalRegion {
    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance(p) <= self.radius
    }

    /// Disk of radius `2 * lane_width` centred on the centerline 5 m before
    /// its end.
    pub fn near_end_of(lanelet: &Lanelet) -> Self {
        let c = lanelet.centerline.interpolate(lanelet.centerline.length() - 5.0);
        GoalRegion {
            center: c.position(),
            radius: 2.0 * lanelet.lane_width,
        }
    }
}

fn default_planner_set() -> String {
    String::from("default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: u32,
    /// Index into the scenario's lanelets.
    #[serde(default)]
    pub lanelet: usize,
    pub initial_s: f64,
    #[serde(default)]
    pub initial_lateral_offset: f64,
    #[serde(default)]
    pub initial_speed: f64,
    pub vehicle_model: String,
    pub goal: GoalRegion,
    /// Name of a planner parameter set in the run configuration.
    #[serde(default = "default_planner_set")]
    pub planner_config: String,
}

impl AgentSpec {
    /// Standing start on the centerline at `initial_s`.
    pub fn new(agent_id: u32, vehicle_model: &str, initial_s: f64, goal: GoalRegion) -> Self {
        Self {
            agent_id,
            lanelet: 0,
            initial_s,
            initial_lateral_offset: 0.0,
            initial_speed: 0.0,
            vehicle_model: vehicle_model.into(),
            goal,
            planner_config: default_planner_set(),
        }
    }
}

/// A concrete scenario. The lanelets are compiled from `roads` and never
/// stored separately, so two scenarios built from equal inputs are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scenario_id: String,
    pub roads: Vec<LaneletSpec>,
    pub lanelets: Vec<Lanelet>,
    pub agents: Vec<AgentSpec>,
    pub dt_plan: f64,
    pub max_steps: u32,
}

impl Scenario {
    pub fn new(
        scenario_id: impl Into<String>,
        roads: Vec<LaneletSpec>,
        agents: Vec<AgentSpec>,
        dt_plan: f64,
        max_steps: u32,
    ) -> Result<Self> {
        let scenario_id = scenario_id.into();
        if scenario_id.is_empty() {
            return Err(Error::invalid("scenario_id", "must not be empty"));
        }
        if roads.is_empty() {
            return Err(Error::invalid("road", "at least one lanelet is required"));
        }
        if agents.is_empty() {
            return Err(Error::invalid("agents", "at least one agent is required"));
        }
        if !(dt_plan.is_finite() && dt_plan > 0.0) {
            return Err(Error::invalid("dt_plan", "must be > 0"));
        }
        if max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be > 0"));
        }
        let lanelets = roads
            .iter()
            .map(|r| build_lanelet(&r.road, r.origin))
            .collect::<Result<Vec<_>>>()?;
        let mut ids = BTreeSet::new();
        for a in &agents {
            if !ids.insert(a.agent_id) {
                return Err(Error::invalid("agents", format!("duplicate agent_id {}", a.agent_id)));
            }
            let lanelet = lanelets.get(a.lanelet).ok_or_else(|| {
                Error::invalid(
                    "agents",
                    format!("agent {} references missing lanelet {}", a.agent_id, a.lanelet),
                )
            })?;
            if !(0.0..=lanelet.centerline.length()).contains(&a.initial_s) {
                return Err(Error::invalid(
                    "agents",
                    format!("agent {} initial_s {} outside lanelet range", a.agent_id, a.initial_s),
                ));
            }
            if !(a.initial_speed.is_finite() && a.initial_speed >= 0.0) {
                return Err(Error::invalid(
                    "agents",
                    format!("agent {} initial_speed must be >= 0", a.agent_id),
                ));
            }
            if !(a.goal.radius > 0.0 && a.goal.radius >= lanelet.lane_width / 2.0) {
                return Err(Error::invalid(
                    "agents",
                    format!("agent {} goal radius must be >= lane_width/2", a.agent_id),
                ));
            }
        }
        Ok(Self {
            scenario_id,
            roads,
            lanelets,
            agents,
            dt_plan,
            max_steps,
        })
    }

    /// Single-lanelet scenario with one standing-start agent at s = 0 and the
    /// default goal region.
    pub fn single_agent(
        scenario_id: impl Into<String>,
        road: RoadSpec,
        vehicle_model: &str,
        dt_plan: f64,
    ) -> Result<Self> {
        road.validate()?;
        let lanelet = build_turn_road(&road)?;
        let goal = GoalRegion::near_end_of(&lanelet);
        let max_steps = default_max_steps(road.total_length(), dt_plan);
        Scenario::new(
            scenario_id,
            alloc::vec![LaneletSpec {
                origin: Pose2::default(),
                road
            }],
            alloc::vec![AgentSpec::new(1, vehicle_model, 0.0, goal)],
            dt_plan,
            max_steps,
        )
    }
}

/// Step budget for a road of the given length: an average of 5 m/s plus 10 s.
pub fn default_max_steps(road_length: f64, dt_plan: f64) -> u32 {
    ((road_length / 5.0 + 10.0) / dt_plan).ceil() as u32
}

/// Pose of an agent on its lanelet: on the centerline at `initial_s`,
/// shifted by `initial_lateral_offset` along the left normal, heading along
/// the centerline tangent.
pub fn place_agent(lanelet: &Lanelet, agent: &AgentSpec) -> Result<VehicleState> {
    let len = lanelet.centerline.length();
    if !(agent.initial_s.is_finite() && (0.0..=len).contains(&agent.initial_s)) {
        return Err(Error::Placement {
            agent_id: agent.agent_id,
            reason: format!("initial_s {} outside [0, {len}]", agent.initial_s),
        });
    }
    let c = lanelet.centerline.interpolate(agent.initial_s);
    let normal = Point2::from_heading(c.heading).perp();
    let p = c.position() + normal * agent.initial_lateral_offset;
    Ok(VehicleState {
        x: p.x,
        y: p.y,
        heading: crate::math::wrap_angle(c.heading),
        v: agent.initial_speed,
        a: 0.0,
        steer: 0.0,
        curvature: 0.0,
        t: 0.0,
    })
}

/// The S-curve used for the vehicle-model study: a left curve, a short
/// straight, then a right curve.
pub fn s_curve_study(dt_plan: f64) -> Scenario {
    let road = RoadSpec {
        entry_length: 40.0,
        radius: Some(20.0),
        turn_angle: Angle::from_degrees(60.0),
        exit_length: 20.0,
        then: alloc::vec![TurnSection {
            radius: 20.0,
            turn_angle: Angle::from_degrees(-60.0),
            exit_length: 40.0,
        }],
        ..RoadSpec::default()
    };
    Scenario::single_agent("s_curve_study", road, "touring", dt_plan).expect("built-in S-curve scenario is valid")
}

/// Two agents on crossing straight lanelets. The second agent starts further
/// from the crossing so the two pass it a few seconds apart.
pub fn crossing_paths(dt_plan: f64) -> Scenario {
    let east = LaneletSpec {
        origin: Pose2 {
            x: -60.0,
            y: 0.0,
            heading: Angle::ZERO,
        },
        road: RoadSpec {
            entry_length: 120.0,
            exit_length: 0.0,
            ..RoadSpec::default()
        },
    };
    let north = LaneletSpec {
        origin: Pose2 {
            x: 0.0,
            y: -90.0,
            heading: Angle::from_degrees(90.0),
        },
        road: RoadSpec {
            entry_length: 150.0,
            exit_length: 0.0,
            ..RoadSpec::default()
        },
    };
    let l0 = build_lanelet(&east.road, east.origin).expect("valid lanelet");
    let l1 = build_lanelet(&north.road, north.origin).expect("valid lanelet");
    let mut a1 = AgentSpec::new(1, "touring", 0.0, GoalRegion::near_end_of(&l0));
    a1.lanelet = 0;
    let mut a2 = AgentSpec::new(2, "touring", 0.0, GoalRegion::near_end_of(&l1));
    a2.lanelet = 1;
    let max_steps = default_max_steps(150.0, dt_plan);
    Scenario::new(
        "crossing_paths",
        alloc::vec![east, north],
        alloc::vec![a1, a2],
        dt_plan,
        max_steps,
    )
    .expect("built-in crossing scenario is valid")
}
