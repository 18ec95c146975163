use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::HarnessError;
use crate::control::Controller;
use crate::negotiation::{
    negotiate, verify_disjointness, DisjointnessReport, NegotiationAgent, NegotiationLog,
    NegotiationParams, ParameterizedTube, ReplanContext, Topology,
};
use crate::simulation::{simulate_fleet, DisturbanceProcess, FleetAgent, FleetRun, FleetSpec};
use crate::tubes::{build_reachability_tube, circumvent_obstacles, verify_tube, Tube, ValidityReport};
use crate::AgentId;

/// Command-line style overrides of scenario parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanOverrides {
    pub delta: Option<f64>,
    pub dt_check: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentValidity {
    pub agent: AgentId,
    pub report: ValidityReport,
}

/// Verification results of a plan; recomputable from the scenario and tubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub params: NegotiationParams,
    /// Grid spacing of the tube property checks.
    pub dt_verify: f64,
    pub validity: Vec<AgentValidity>,
    pub disjointness: DisjointnessReport,
}

impl PlanReport {
    pub fn ok(&self) -> bool {
        self.validity.iter().all(|v| v.report.all_ok()) && self.disjointness.is_clean()
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    /// Obstacle-circumvented tubes before negotiation.
    pub pre: Vec<Tube>,
    pub post: Vec<ParameterizedTube>,
    pub log: NegotiationLog,
    pub report: PlanReport,
}

impl Plan {
    pub fn tubes(&self) -> Vec<Tube> {
        self.post.iter().map(|p| p.tube().clone()).collect()
    }
}

/// Negotiation parameters of `scenario` after applying `overrides`.
pub fn negotiation_params(scenario: &Scenario, overrides: &PlanOverrides) -> Result<NegotiationParams, HarnessError> {
    let spec = &scenario.file.negotiation;
    let mut p = NegotiationParams::defaults(scenario.horizon(), scenario.agents.len());
    if let Some(dt) = overrides.dt_check.or(spec.dt_check_s) {
        p.dt_check = dt;
        p.delta = 2.0 * dt;
        p.blend = 4.0 * dt;
    }
    if let Some(d) = overrides.delta.or(spec.delta_s) {
        p.delta = d;
    }
    if let Some(b) = spec.blend_s {
        p.blend = b;
    }
    if let Some(m) = overrides.max_iter.or(spec.max_iter) {
        p.max_iter = m;
    }
    if !(p.dt_check > 0.0 && p.delta > 0.0 && p.blend >= 0.0 && p.max_iter > 0) {
        return Err(HarnessError::Invalid(vec![
            "negotiation parameters must be positive (blend may be zero)".into(),
        ]));
    }
    Ok(p)
}

pub fn topology(scenario: &Scenario) -> Result<Topology, HarnessError> {
    let ids = scenario.agent_ids();
    let spec = &scenario.file.negotiation;
    let mut topo = match &spec.edges {
        Some(edges) => {
            let e: Vec<(AgentId, AgentId)> = edges.iter().map(|[a, b]| (AgentId(*a), AgentId(*b))).collect();
            Topology::with_edges(&ids, &e)?
        }
        None => Topology::fully_connected(&ids),
    };
    if let Some(order) = &spec.token_order {
        topo = topo.with_token_order(order.iter().map(|&i| AgentId(i)).collect())?;
    }
    Ok(topo)
}

/// Negotiation view of every agent: workspace mask plus what a replan needs.
pub fn negotiation_agents(scenario: &Scenario) -> Vec<NegotiationAgent> {
    scenario
        .agents
        .iter()
        .map(|a| NegotiationAgent {
            id: a.id,
            workspace_mask: a.workspace_mask.clone(),
            replan: ReplanContext {
                target: a.target.clone(),
                arena: a.arena.clone(),
                obstacles: a.obstacles.clone(),
                clearance: scenario.clearance.clone(),
                width_policy: a.width,
            },
        })
        .collect()
}

/// Builds, circumvents and negotiates the tubes of every agent.
pub fn plan(scenario: &Scenario, overrides: &PlanOverrides) -> Result<Plan, HarnessError> {
    let params = negotiation_params(scenario, overrides)?;
    let topo = topology(scenario)?;
    let mut pre = Vec::new();
    for a in &scenario.agents {
        let tube = build_reachability_tube(a.id, &a.start, &a.target, a.prescribed_time, &a.arena, a.width)
            .and_then(|t| circumvent_obstacles(&t, &a.obstacles, &a.arena, &scenario.clearance, params.dt_check))
            .map_err(|source| HarnessError::Tube { agent: a.id, source })?;
        pre.push(tube);
    }
    let (post, log) = negotiate(
        &negotiation_agents(scenario),
        pre.iter().cloned().map(ParameterizedTube::new).collect(),
        &topo,
        &params,
    )?;
    let tubes: Vec<Tube> = post.iter().map(|p| p.tube().clone()).collect();
    let report = verify_plan(scenario, &tubes, params)?;
    Ok(Plan { pre, post, log, report })
}

/// Re-runs the tube property checks and the pairwise disjointness check.
pub fn verify_plan(scenario: &Scenario, tubes: &[Tube], params: NegotiationParams) -> Result<PlanReport, HarnessError> {
    if tubes.len() != scenario.agents.len() {
        return Err(HarnessError::Mismatch(format!(
            "{} tubes for {} agents",
            tubes.len(),
            scenario.agents.len()
        )));
    }
    let dt_verify = scenario.horizon() / 1e4;
    let mut validity = Vec::new();
    for (a, t) in scenario.agents.iter().zip(tubes) {
        if t.agent() != a.id || t.ndim() != a.state_dim {
            return Err(HarnessError::Mismatch(format!("tube {} does not fit agent {}", t.agent(), a.id)));
        }
        let report = verify_tube(t, &a.start, &a.target, &a.arena, &a.obstacles, dt_verify)
            .map_err(|source| HarnessError::Tube { agent: a.id, source })?;
        validity.push(AgentValidity { agent: a.id, report });
    }
    let masks: Vec<Vec<usize>> = scenario.agents.iter().map(|a| a.workspace_mask.clone()).collect();
    let disjointness = verify_disjointness(tubes, &masks, params.dt_check)?;
    Ok(PlanReport {
        params,
        dt_verify,
        validity,
        disjointness,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationOverrides {
    pub dt: Option<f64>,
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
}

/// Resolved simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub dt: f64,
    pub seeds: Vec<u64>,
    pub stay_window: f64,
    pub separation_radius: f64,
    pub process: DisturbanceProcess,
    pub trajectory_stride: usize,
}

/// Default step: 1 ms per 200 s of horizon.
pub fn default_dt(horizon: f64) -> f64 {
    1e-3 * horizon / 200.0
}

pub fn simulation_settings(scenario: &Scenario, o: &SimulationOverrides) -> Result<SimulationSettings, HarnessError> {
    let spec = &scenario.file.simulation;
    let horizon = scenario.horizon();
    let dt = o.dt.or(spec.dt_s).unwrap_or_else(|| default_dt(horizon));
    let count = o.seeds.or(spec.seeds).unwrap_or(1);
    let base = o.seed.or(spec.base_seed).unwrap_or(0);
    let s = SimulationSettings {
        dt,
        seeds: (0..count as u64).map(|k| base + k).collect(),
        stay_window: spec.stay_window_s.unwrap_or(0.05 * horizon),
        separation_radius: spec.separation_radius_m.unwrap_or(0.0),
        process: spec.disturbance.unwrap_or_default(),
        trajectory_stride: spec.trajectory_stride.unwrap_or(1),
    };
    if !(s.dt > 0.0 && s.dt.is_finite()) || s.seeds.is_empty() || !(s.stay_window >= 0.0) || s.trajectory_stride == 0 {
        return Err(HarnessError::Invalid(vec![
            "simulation needs dt > 0, at least one seed, stay window ≥ 0 and stride ≥ 1".into(),
        ]));
    }
    Ok(s)
}

/// Fleet ready for simulation with the negotiated `tubes`.
///
/// Agents without an explicit disturbance bound get 5% of their tube's peak
/// boundary slew in every state dimension.
pub fn fleet_spec(scenario: &Scenario, tubes: &[Tube], settings: &SimulationSettings) -> Result<FleetSpec, HarnessError> {
    let mut agents = Vec::new();
    for (a, tube) in scenario.agents.iter().zip(tubes) {
        let d_max = match &a.disturbance_max {
            Some(d) => d.clone(),
            None => vec![0.05 * tube.peak_slew(a.prescribed_time / 1e4); a.state_dim],
        };
        agents.push(FleetAgent {
            id: a.id,
            model: a.model.clone(),
            tube: tube.clone(),
            controller: Controller::new(a.gains.clone(), a.channel_map),
            d_max,
            process: settings.process,
            x0: a.x0.clone(),
            target: a.target.clone(),
            obstacles: a.obstacles.clone(),
            arena: a.arena.clone(),
            prescribed_time: a.prescribed_time,
            stay_window: settings.stay_window,
            workspace_mask: a.workspace_mask.clone(),
        });
    }
    Ok(FleetSpec::new(agents, settings.dt, settings.separation_radius)?)
}

/// Simulates the fleet once per configured seed.
pub fn simulate(spec: &FleetSpec, settings: &SimulationSettings) -> Result<Vec<FleetRun>, HarnessError> {
    settings
        .seeds
        .iter()
        .map(|&seed| simulate_fleet(spec, seed).map_err(HarnessError::from))
        .collect()
}
