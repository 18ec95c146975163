use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evaluate_ras, simulate_agent, DisturbanceProcess, DisturbanceSpec, DynamicsModel, Event,
    RasVerdict, SimulationError, Trajectory,
};
use crate::control::Controller;
use crate::geometry::HyperRect;
use crate::negotiation::verify_disjointness;
use crate::tubes::{ObstacleSet, Tube};
use crate::AgentId;

/// Everything needed to simulate one agent of a fleet.
#[derive(Debug, Clone)]
pub struct FleetAgent {
    pub id: AgentId,
    pub model: DynamicsModel,
    pub tube: Tube,
    pub controller: Controller,
    pub d_max: Vec<f64>,
    pub process: DisturbanceProcess,
    pub x0: Vec<f64>,
    pub target: HyperRect,
    pub obstacles: ObstacleSet,
    pub arena: HyperRect,
    pub prescribed_time: f64,
    pub stay_window: f64,
    pub workspace_mask: Vec<usize>,
}

/// A fleet ready to be simulated under any number of seeds.
#[derive(Debug, Clone)]
pub struct FleetSpec {
    agents: Vec<FleetAgent>,
    dt: f64,
    separation_radius: f64,
    tubes_disjoint: bool,
}

impl FleetSpec {
    /// Checks the tubes for pairwise disjointness once, on a grid of
    /// `min horizon / 10⁴`.
    pub fn new(agents: Vec<FleetAgent>, dt: f64, separation_radius: f64) -> Result<Self, SimulationError> {
        if agents.is_empty() {
            return Err(SimulationError::InvalidParameter("fleet has no agents"));
        }
        if !(separation_radius >= 0.0 && separation_radius.is_finite()) {
            return Err(SimulationError::InvalidParameter("separation radius must be non-negative"));
        }
        let tubes: Vec<Tube> = agents.iter().map(|a| a.tube.clone()).collect();
        let masks: Vec<Vec<usize>> = agents.iter().map(|a| a.workspace_mask.clone()).collect();
        let dt_check = tubes.iter().map(Tube::horizon).fold(f64::INFINITY, f64::min) / 1e4;
        let tubes_disjoint = verify_disjointness(&tubes, &masks, dt_check)
            .map_err(|_| SimulationError::InvalidParameter("workspace masks differ in length"))?
            .is_clean();
        Ok(Self {
            agents,
            dt,
            separation_radius,
            tubes_disjoint,
        })
    }

    pub fn agents(&self) -> &[FleetAgent] {
        &self.agents
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tubes_disjoint(&self) -> bool {
        self.tubes_disjoint
    }

    /// Common simulated span: the longest `t_p + stay window` of the fleet.
    pub fn duration(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.prescribed_time + a.stay_window)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetReport {
    pub seed: u64,
    /// Smallest pairwise workspace distance over all samples.
    pub min_distance: Option<f64>,
    pub min_distance_t: Option<f64>,
    pub closest_pair: Option<[AgentId; 2]>,
    pub collision_free: bool,
    pub all_contained: bool,
    pub tubes_disjoint: bool,
    /// Containment in pairwise disjoint tubes kept the agents apart.
    pub safety_chain_holds: bool,
    pub all_satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct FleetRun {
    pub trajectories: Vec<Trajectory>,
    pub verdicts: Vec<RasVerdict>,
    pub report: FleetReport,
    /// Fleet-level events (collisions).
    pub events: Vec<Event>,
}

fn distance(a: &[f64], ma: &[usize], b: &[f64], mb: &[usize]) -> f64 {
    ma.iter()
        .zip(mb)
        .map(|(&i, &j)| (a[i] - b[j]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Simulates every agent independently (in parallel) under `seed`, then
/// evaluates the per-agent verdicts and pairwise separation.
pub fn simulate_fleet(spec: &FleetSpec, seed: u64) -> Result<FleetRun, SimulationError> {
    let duration = spec.duration();
    let mut trajectories = spec
        .agents
        .par_iter()
        .map(|a| {
            let dist = DisturbanceSpec {
                d_max: a.d_max.clone(),
                seed,
                process: a.process,
            };
            simulate_agent(&a.model, &a.tube, &a.controller, &dist, &a.x0, spec.dt, duration)
                .map_err(|e| e.for_agent(a.id))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut verdicts: Vec<RasVerdict> = spec
        .agents
        .iter()
        .zip(&trajectories)
        .map(|(a, tr)| {
            evaluate_ras(
                tr,
                &a.target,
                &a.obstacles,
                Some(&a.arena),
                a.prescribed_time,
                a.stay_window,
            )
        })
        .collect();

    let mut events = Vec::new();
    let mut fleet_min: Option<(f64, f64, [AgentId; 2])> = None;
    let n = spec.agents.len();
    let samples = trajectories.iter().map(Trajectory::len).min().unwrap_or(0);
    for i in 0..n {
        for j in i + 1..n {
            let (ai, aj) = (&spec.agents[i], &spec.agents[j]);
            let (ti, tj) = (&trajectories[i], &trajectories[j]);
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..samples {
                let d = distance(ti.state(k), &ai.workspace_mask, tj.state(k), &aj.workspace_mask);
                if d < best.0 {
                    best = (d, ti.time(k));
                }
            }
            for v in [i, j] {
                let slot = &mut verdicts[v].min_distance;
                *slot = Some(slot.map_or(best.0, |m: f64| m.min(best.0)));
                if best.0 <= spec.separation_radius {
                    verdicts[v].collision_free = false;
                }
            }
            if best.0 <= spec.separation_radius {
                events.push(Event::Collision {
                    a: ai.id,
                    b: aj.id,
                    t: best.1,
                    distance: best.0,
                });
            }
            if fleet_min.is_none_or(|(d, _, _)| best.0 < d) {
                fleet_min = Some((best.0, best.1, [ai.id, aj.id]));
            }
        }
    }

    for (tr, v) in trajectories.iter_mut().zip(&verdicts) {
        if let Some(t) = v.reach_time {
            tr.push_event(Event::Reach { agent: v.agent, t });
        }
    }

    let all_contained = verdicts.iter().all(|v| v.contained);
    let collision_free = verdicts.iter().all(|v| v.collision_free);
    let min_distance = fleet_min.map(|m| m.0);
    let report = FleetReport {
        seed,
        min_distance,
        min_distance_t: fleet_min.map(|m| m.1),
        closest_pair: fleet_min.map(|m| m.2),
        collision_free,
        all_contained,
        tubes_disjoint: spec.tubes_disjoint,
        safety_chain_holds: !(all_contained && spec.tubes_disjoint) || min_distance.is_none_or(|d| d > 0.0),
        all_satisfied: verdicts.iter().all(RasVerdict::satisfied),
    };
    Ok(FleetRun {
        trajectories,
        verdicts,
        report,
        events,
    })
}
