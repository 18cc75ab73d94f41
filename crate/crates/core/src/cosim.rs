//! Synchronized multi-agent co-simulation.
//!
//! Every cycle each active agent plans from its executed state, all agents
//! advance one planning step through their backend, and the executed states
//! become the next cycle's initial conditions. Agents see each other's states
//! from the previous step boundary only.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backends::{
    Backend, ControlCommand, ControllerGains, Fidelity, HifiBackend, LofiBackend, VehicleCatalog, VehicleParams,
    VehicleState,
};
use crate::geometry::Point2;
#[allow(unused_imports)]
use crate::math::Float;
use crate::planner::{footprints_overlap, Planner, PlannerConfig, ReferencePath, TrajectoryPoint};
use crate::scenario::{place_agent, AgentSpec, Scenario};
use crate::{Error, Result};

fn default_planner_sets() -> BTreeMap<String, PlannerConfig> {
    let mut m = BTreeMap::new();
    m.insert(String::from("default"), PlannerConfig::default());
    m
}

/// Parameters of one run. Optional fields fall back to the scenario's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub backend: Fidelity,
    pub dt_plan: Option<f64>,
    /// High fidelity only.
    pub substeps: usize,
    pub max_steps: Option<u32>,
    /// When set, the goal also requires `v` at or below this speed.
    pub goal_speed_threshold: Option<f64>,
    /// Seeds the optional acceleration noise.
    pub seed: u64,
    /// Amplitude of uniform acceleration noise, m/s². Zero disables it.
    pub accel_noise: f64,
    /// Planned samples kept per agent and step, starting at the step's time.
    pub snapshot_len: usize,
    pub gains: ControllerGains,
    /// Planner parameter sets referenced by `AgentSpec::planner_config`.
    pub planner_sets: BTreeMap<String, PlannerConfig>,
    pub catalog: VehicleCatalog,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: Fidelity::Low,
            dt_plan: None,
            substeps: 10,
            max_steps: None,
            goal_speed_threshold: None,
            seed: 0,
            accel_noise: 0.0,
            snapshot_len: 11,
            gains: ControllerGains::default(),
            planner_sets: default_planner_sets(),
            catalog: VehicleCatalog::builtin(),
        }
    }
}

impl RunConfig {
    pub fn with_backend(backend: Fidelity) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt_plan {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::invalid("dt_plan", "must be > 0"));
            }
        }
        if self.max_steps == Some(0) {
            return Err(Error::invalid("max_steps", "must be > 0"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("substeps", "must be >= 1"));
        }
        if let Some(v) = self.goal_speed_threshold {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("goal_speed_threshold", "must be >= 0"));
            }
        }
        if !(self.accel_noise.is_finite() && self.accel_noise >= 0.0) {
            return Err(Error::invalid("accel_noise", "must be >= 0"));
        }
        if self.snapshot_len < 2 {
            return Err(Error::invalid("snapshot_len", "must be >= 2"));
        }
        for (name, p) in &self.planner_sets {
            p.validate()
                .map_err(|e| Error::invalid("planner_sets", format!("{name}: {e}")))?;
        }
        for v in self.catalog.entries() {
            v.validate()?;
        }
        Ok(())
    }

    pub fn effective_dt(&self, scenario: &Scenario) -> f64 {
        self.dt_plan.unwrap_or(scenario.dt_plan)
    }

    pub fn effective_max_steps(&self, scenario: &Scenario) -> u32 {
        self.max_steps.unwrap_or(scenario.max_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Ok,
    /// No feasible candidate; the agent follows an emergency-brake trajectory.
    Fallback,
    /// The agent terminated at this step and did not plan.
    Final,
}

impl PlanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanStatus::Ok => "ok",
            PlanStatus::Fallback => "fallback",
            PlanStatus::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub agent_id: u32,
    /// Executed state at the record's time.
    pub state: VehicleState,
    /// Leading samples of the plan made from `state`; empty when final.
    pub planned: Vec<TrajectoryPoint>,
    /// First command of the following step; high fidelity only.
    pub command: Option<ControlCommand>,
    pub status: PlanStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: u32,
    /// Exactly `step_index * dt_plan`.
    pub t: f64,
    /// Active agents in ascending `agent_id` order.
    pub agents: Vec<AgentStep>,
}

impl StepRecord {
    pub fn agent(&self, agent_id: u32) -> Option<&AgentStep> {
        self.agents.iter().find(|a| a.agent_id == agent_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    GoalReached,
    Timeout,
    OffRoad,
    Collision,
    DynamicsError,
}

impl TerminationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationKind::GoalReached => "goal_reached",
            TerminationKind::Timeout => "timeout",
            TerminationKind::OffRoad => "off_road",
            TerminationKind::Collision => "collision",
            TerminationKind::DynamicsError => "dynamics_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub agent_id: u32,
    pub kind: TerminationKind,
    pub step_index: u32,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub scenario_id: String,
    pub backend: Fidelity,
    pub dt_plan: f64,
    pub config: RunConfig,
    /// Vehicle model per agent id.
    pub vehicle_models: BTreeMap<u32, String>,
    pub records: Vec<StepRecord>,
    /// One per agent, ascending `agent_id`.
    pub terminations: Vec<Termination>,
    /// Zero unless set by a timing wrapper.
    pub wall_clock_seconds: f64,
}

impl RunLog {
    pub fn termination(&self, agent_id: u32) -> Option<&Termination> {
        self.terminations.iter().find(|t| t.agent_id == agent_id)
    }

    /// Executed states of one agent, in step order.
    pub fn executed(&self, agent_id: u32) -> Vec<(u32, VehicleState)> {
        self.records
            .iter()
            .filter_map(|r| r.agent(agent_id).map(|a| (r.step_index, a.state)))
            .collect()
    }

    /// For every record after the first: the state planned one step earlier
    /// for this record's time, paired with the executed state.
    pub fn planned_vs_executed(&self, agent_id: u32) -> Vec<(u32, TrajectoryPoint, VehicleState)> {
        self.records
            .windows(2)
            .filter_map(|w| {
                let prev = w[0].agent(agent_id)?;
                let cur = w[1].agent(agent_id)?;
                let p = *prev.planned.get(1)?;
                Some((w[1].step_index, p, cur.state))
            })
            .collect()
    }

    pub fn fallback_count(&self) -> usize {
        self.records
            .iter()
            .flat_map(|r| &r.agents)
            .filter(|a| a.status == PlanStatus::Fallback)
            .count()
    }

    pub fn all_reached_goal(&self) -> bool {
        self.terminations.iter().all(|t| t.kind == TerminationKind::GoalReached)
    }
}

struct ActiveAgent {
    spec: AgentSpec,
    params: VehicleParams,
    path: ReferencePath,
    planner: Planner,
    backend: Box<dyn Backend>,
    state: VehicleState,
}

fn pose(s: &VehicleState) -> (f64, f64, f64) {
    (s.x, s.y, s.heading)
}

/// Runs one scenario to completion. Configuration problems are returned as
/// errors; in-run failures end up in the log's terminations.
pub fn run_scenario(scenario: &Scenario, config: &RunConfig) -> Result<RunLog> {
    config.validate()?;
    let dt = config.effective_dt(scenario);
    let max_steps = config.effective_max_steps(scenario);

    let mut specs = scenario.agents.clone();
    specs.sort_by_key(|a| a.agent_id);
    let mut agents = Vec::with_capacity(specs.len());
    let mut vehicle_models = BTreeMap::new();
    for spec in specs {
        let params = config.catalog.get(&spec.vehicle_model)?.clone();
        let planner_cfg = config
            .planner_sets
            .get(&spec.planner_config)
            .ok_or_else(|| Error::UnknownPlannerConfig(spec.planner_config.clone()))?;
        let planner = Planner::new(planner_cfg.clone(), dt)?;
        let lanelet = &scenario.lanelets[spec.lanelet];
        let mut backend: Box<dyn Backend> = match config.backend {
            Fidelity::Low => Box::new(LofiBackend::new(params.wheelbase)),
            Fidelity::High => Box::new(
                HifiBackend::new(params.clone(), config.gains, config.substeps)?
                    .with_accel_noise(config.seed ^ u64::from(spec.agent_id), config.accel_noise),
            ),
        };
        let state = backend.spawn(lanelet, &spec)?;
        vehicle_models.insert(spec.agent_id, spec.vehicle_model.clone());
        agents.push(ActiveAgent {
            path: ReferencePath::from_lanelet(lanelet),
            params,
            planner,
            backend,
            state,
            spec,
        });
    }

    let mut records = Vec::new();
    let mut terminations: Vec<Termination> = Vec::new();
    let mut step: u32 = 0;
    loop {
        let t = f64::from(step) * dt;
        let mut ended: BTreeMap<u32, (TerminationKind, Option<String>)> = BTreeMap::new();

        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                if footprints_overlap(
                    &a.params.footprint(),
                    pose(&a.state),
                    &b.params.footprint(),
                    pose(&b.state),
                ) {
                    for (me, other) in [(a, b), (b, a)] {
                        ended.entry(me.spec.agent_id).or_insert((
                            TerminationKind::Collision,
                            Some(format!("overlap with agent {}", other.spec.agent_id)),
                        ));
                    }
                }
            }
        }
        for a in &agents {
            if ended.contains_key(&a.spec.agent_id) {
                continue;
            }
            let p = Point2::new(a.state.x, a.state.y);
            let on_road = a.path.project(p).is_ok_and(|(_, d)| d.abs() <= a.path.lane_width());
            let at_goal = a.spec.goal.contains(p) && config.goal_speed_threshold.is_none_or(|v| a.state.v <= v);
            if at_goal {
                ended.insert(a.spec.agent_id, (TerminationKind::GoalReached, None));
            } else if !on_road {
                ended.insert(a.spec.agent_id, (TerminationKind::OffRoad, None));
            } else if step >= max_steps {
                ended.insert(a.spec.agent_id, (TerminationKind::Timeout, None));
            }
        }

        // Simultaneous moves: every agent observes the same boundary states.
        let boundary: Vec<(u32, VehicleState)> = agents.iter().map(|a| (a.spec.agent_id, a.state)).collect();
        let mut entries = Vec::with_capacity(agents.len());
        let mut plans = Vec::with_capacity(agents.len());
        for a in &agents {
            if ended.contains_key(&a.spec.agent_id) {
                entries.push(AgentStep {
                    agent_id: a.spec.agent_id,
                    state: a.state,
                    planned: Vec::new(),
                    command: None,
                    status: PlanStatus::Final,
                });
                plans.push(None);
                continue;
            }
            let others: Vec<_> = boundary
                .iter()
                .filter(|(id, _)| *id != a.spec.agent_id && !ended.contains_key(id))
                .map(|(_, s)| s.cartesian())
                .collect();
            let obstacles = a.planner.predict_obstacles(&others);
            let current = a.state.cartesian();
            let launch = a.state.v < a.planner.config().launch_speed;
            let (mut traj, status) = match a.planner.plan_from_state(&a.path, &current, &obstacles, launch) {
                Ok(traj) => (traj, PlanStatus::Ok),
                Err(_) => (a.planner.emergency_brake(&current), PlanStatus::Fallback),
            };
            traj.start_time = t;
            entries.push(AgentStep {
                agent_id: a.spec.agent_id,
                state: a.state,
                planned: traj.points.iter().take(config.snapshot_len).copied().collect(),
                command: None,
                status,
            });
            plans.push(Some(traj));
        }

        let mut aborted: Option<(u32, String)> = None;
        for ((a, entry), plan) in agents.iter_mut().zip(entries.iter_mut()).zip(&plans) {
            let Some(traj) = plan else { continue };
            match a.backend.step(&a.state, traj, dt) {
                Ok(out) => {
                    entry.command = out.command;
                    a.state = out.state;
                    a.state.t = f64::from(step + 1) * dt;
                }
                Err(e) => {
                    aborted = Some((a.spec.agent_id, e.to_string()));
                    break;
                }
            }
        }

        records.push(StepRecord {
            step_index: step,
            t,
            agents: entries,
        });
        for (id, (kind, detail)) in ended {
            terminations.push(Termination {
                agent_id: id,
                kind,
                step_index: step,
                t,
                detail,
            });
        }
        agents.retain(|a| terminations.iter().all(|t| t.agent_id != a.spec.agent_id));

        if let Some((culprit, msg)) = aborted {
            for a in &agents {
                terminations.push(Termination {
                    agent_id: a.spec.agent_id,
                    kind: TerminationKind::DynamicsError,
                    step_index: step,
                    t,
                    detail: Some(if a.spec.agent_id == culprit {
                        msg.clone()
                    } else {
                        format!("run aborted by agent {culprit}")
                    }),
                });
            }
            agents.clear();
        }
        if agents.is_empty() {
            break;
        }
        step += 1;
    }
    terminations.sort_by_key(|t| t.agent_id);

    Ok(RunLog {
        scenario_id: scenario.scenario_id.clone(),
        backend: config.backend,
        dt_plan: dt,
        config: config.clone(),
        vehicle_models,
        records,
        terminations,
        wall_clock_seconds: 0.0,
    })
}

/// Circle-footprint overlaps found by rescanning a finished log:
/// `(step_index, agent_a, agent_b)` with `agent_a < agent_b`.
pub fn scan_collisions(log: &RunLog) -> Result<Vec<(u32, u32, u32)>> {
    let mut footprints = BTreeMap::new();
    for (id, model) in &log.vehicle_models {
        footprints.insert(*id, log.config.catalog.get(model)?.footprint());
    }
    let mut hits = Vec::new();
    for r in &log.records {
        for (i, a) in r.agents.iter().enumerate() {
            for b in &r.agents[i + 1..] {
                if footprints_overlap(
                    &footprints[&a.agent_id],
                    pose(&a.state),
                    &footprints[&b.agent_id],
                    pose(&b.state),
                ) {
                    hits.push((r.step_index, a.agent_id, b.agent_id));
                }
            }
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParity {
    pub agent_id: u32,
    pub position_delta: f64,
    pub heading_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub scenario_id: String,
    pub agents: Vec<AgentParity>,
    /// Agents that could not be placed, with the reason.
    pub failures: Vec<(u32, String)>,
}

impl ParityReport {
    pub fn max_delta(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.position_delta.max(a.heading_delta))
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.max_delta() == 0.0
    }
}

/// Spawns every agent in both backends and reports the initial pose
/// difference.
pub fn check_instantiation_parity(scenario: &Scenario, catalog: &VehicleCatalog) -> ParityReport {
    let mut report = ParityReport {
        scenario_id: scenario.scenario_id.clone(),
        agents: Vec::new(),
        failures: Vec::new(),
    };
    for agent in &scenario.agents {
        let spawned = catalog.get(&agent.vehicle_model).and_then(|params| {
            let lanelet = &scenario.lanelets[agent.lanelet];
            let mut lofi = LofiBackend::new(params.wheelbase);
            let mut hifi = HifiBackend::new(params.clone(), ControllerGains::default(), 1)?;
            Ok((lofi.spawn(lanelet, agent)?, hifi.spawn(lanelet, agent)?))
        });
        match spawned {
            Ok((lo, hi)) => report.agents.push(AgentParity {
                agent_id: agent.agent_id,
                position_delta: (lo.x - hi.x).hypot(lo.y - hi.y),
                heading_delta: crate::math::wrap_angle(lo.heading - hi.heading).abs(),
            }),
            Err(e) => report.failures.push((agent.agent_id, e.to_string())),
        }
    }
    report.agents.sort_by_key(|a| a.agent_id);
    report
}

/// Initial states of all agents, as both backends place them.
pub fn initial_states(scenario: &Scenario) -> Result<Vec<(u32, VehicleState)>> {
    scenario
        .agents
        .iter()
        .map(|a| Ok((a.agent_id, place_agent(&scenario.lanelets[a.lanelet], a)?)))
        .collect()
}
