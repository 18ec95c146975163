use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::control::{ChannelMap, ControllerGains};
use crate::geometry::{HyperRect, Interval};
use crate::simulation::{DisturbanceProcess, DynamicsModel};
use crate::tubes::{Clearance, Obstacle, ObstacleSet, WidthPolicy};
use crate::AgentId;

/// Scenario schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub arena: ArenaSpec,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub negotiation: NegotiationSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

/// Workspace bounds in meters, one `[lo, hi]` pair per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaSpec {
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub name: String,
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    /// Planar robot with heading; state `[x, y, θ]`.
    OmniRobot,
    /// `ẋ = u` over the workspace dimensions.
    SingleIntegrator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMapKind {
    #[default]
    Identity,
    InverseRotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: u32,
    pub dynamics: DynamicsKind,
    /// Initial set, workspace dimensions only.
    pub initial: Vec<[f64; 2]>,
    /// Target set, workspace dimensions only.
    pub target: Vec<[f64; 2]>,
    pub prescribed_time_s: f64,
    /// One gain per state dimension; a single value is broadcast.
    #[serde(default)]
    pub gains: Option<Vec<f64>>,
    /// Disturbance bound per state dimension (state units per second); a single
    /// value is broadcast.
    #[serde(default)]
    pub disturbance_max: Option<Vec<f64>>,
    #[serde(default)]
    pub channel_map: ChannelMapKind,
    /// Full initial state; defaults to the centre of the initial set (heading 0).
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// Obstacles seen only by this agent, in addition to the global ones.
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub width: WidthPolicy,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegotiationSpec {
    pub delta_s: Option<f64>,
    pub dt_check_s: Option<f64>,
    pub blend_s: Option<f64>,
    pub max_iter: Option<usize>,
    pub token_order: Option<Vec<u32>>,
    /// Undirected communication edges; all pairs when absent.
    pub edges: Option<Vec<[u32; 2]>>,
    /// Obstacle clearance as a fraction of each arena span.
    pub clearance_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub dt_s: Option<f64>,
    pub seeds: Option<usize>,
    pub base_seed: Option<u64>,
    pub stay_window_s: Option<f64>,
    pub separation_radius_m: Option<f64>,
    pub disturbance: Option<DisturbanceProcess>,
    pub trajectory_stride: Option<usize>,
}

/// A validated agent with all sets lifted to its full state space.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: AgentId,
    pub kind: DynamicsKind,
    pub model: DynamicsModel,
    pub state_dim: usize,
    pub workspace_mask: Vec<usize>,
    pub start: HyperRect,
    pub target: HyperRect,
    /// Arena lifted to the state space.
    pub arena: HyperRect,
    pub obstacles: ObstacleSet,
    pub prescribed_time: f64,
    pub gains: ControllerGains,
    pub channel_map: ChannelMap,
    pub disturbance_max: Option<Vec<f64>>,
    pub x0: Vec<f64>,
    pub width: WidthPolicy,
}

/// A loaded scenario that satisfies all well-posedness checks.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub name: String,
    pub arena: HyperRect,
    pub global_obstacles: Vec<Obstacle>,
    pub agents: Vec<Agent>,
    pub clearance: Clearance,
}

fn rect(bounds: &[[f64; 2]], what: &str) -> Result<HyperRect, HarnessError> {
    HyperRect::from_bounds(bounds).map_err(|e| HarnessError::Invalid(vec![format!("{what}: {e}")]))
}

fn heading() -> Interval {
    Interval::new(-PI, PI).expect("valid interval")
}

fn lift(r: &HyperRect, kind: DynamicsKind) -> HyperRect {
    match kind {
        DynamicsKind::OmniRobot => {
            let mut dims = r.dims().to_vec();
            dims.push(heading());
            HyperRect::new(dims).expect("non-empty")
        }
        DynamicsKind::SingleIntegrator => r.clone(),
    }
}

fn broadcast(v: &[f64], n: usize, what: &str, id: u32) -> Result<Vec<f64>, HarnessError> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        len if len == n => Ok(v.to_vec()),
        len => Err(HarnessError::Invalid(vec![format!(
            "agent {id}: {what} has {len} entries, expected 1 or {n}"
        )])),
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Parse { message, .. } => HarnessError::Parse {
                path: Some(path.to_path_buf()),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: None,
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, HarnessError> {
        if file.version != SCHEMA_VERSION {
            return Err(HarnessError::Invalid(vec![format!(
                "unsupported scenario version {} (expected {SCHEMA_VERSION})",
                file.version
            )]));
        }
        if file.agents.is_empty() {
            return Err(HarnessError::Invalid(vec!["scenario has no agents".into()]));
        }
        let arena = rect(&file.arena.bounds, "arena")?;
        let wdim = arena.ndim();
        let mut problems = Vec::new();

        let mut global_obstacles = Vec::new();
        for o in &file.obstacles {
            let r = rect(&o.bounds, &format!("obstacle {}", o.name))?;
            if r.ndim() != wdim {
                problems.push(format!("obstacle {} has {} dimensions, arena has {wdim}", o.name, r.ndim()));
                continue;
            }
            global_obstacles.push(Obstacle::new(o.name.clone(), r));
        }

        let mut ids = BTreeSet::new();
        let mut agents = Vec::new();
        for a in &file.agents {
            if !ids.insert(a.id) {
                problems.push(format!("duplicate agent id {}", a.id));
                continue;
            }
            match build_agent(a, &arena, &global_obstacles) {
                Ok(agent) => agents.push(agent),
                Err(HarnessError::Invalid(mut v)) => problems.append(&mut v),
                Err(e) => return Err(e),
            }
        }
        if !problems.is_empty() {
            return Err(HarnessError::Invalid(problems));
        }

        let clearance = match file.negotiation.clearance_fraction {
            Some(fraction) if !(fraction.is_finite() && fraction >= 0.0) => {
                return Err(HarnessError::Invalid(vec!["clearance_fraction must be non-negative".into()]));
            }
            Some(fraction) => Clearance::ArenaFraction { fraction },
            None => Clearance::default(),
        };
        let name = file.name.clone().unwrap_or_else(|| "scenario".to_string());
        let scenario = Scenario {
            file,
            name,
            arena,
            global_obstacles,
            agents,
            clearance,
        };
        let violations = scenario.well_posedness_violations();
        if !violations.is_empty() {
            return Err(HarnessError::Invalid(violations));
        }
        Ok(scenario)
    }

    /// Checks that every initial and target set lies in the arena and misses every
    /// obstacle, and that initial sets and target sets are pairwise disjoint across
    /// agents.
    pub fn well_posedness_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.agents {
            for (label, set) in [("S", &a.start), ("T", &a.target)] {
                if !a.arena.contains_unchecked(set) {
                    out.push(format!("{label}{} is not inside the arena", a.id));
                }
                for o in a.obstacles.iter() {
                    if set.intersects_unchecked(&o.rect) {
                        out.push(format!("{label}{} ∩ {} ≠ ∅", a.id, o.name));
                    }
                }
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                let pa = |r: &HyperRect| r.project(&a.workspace_mask).expect("mask in range");
                let pb = |r: &HyperRect| r.project(&b.workspace_mask).expect("mask in range");
                if pa(&a.start).intersects_unchecked(&pb(&b.start)) {
                    out.push(format!("S{} ∩ S{} ≠ ∅", a.id, b.id));
                }
                if pa(&a.target).intersects_unchecked(&pb(&b.target)) {
                    out.push(format!("T{} ∩ T{} ≠ ∅", a.id, b.id));
                }
            }
        }
        out
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.agents.iter().map(|a| a.id).collect()
    }

    /// Longest prescribed time in the scenario.
    pub fn horizon(&self) -> f64 {
        self.agents.iter().map(|a| a.prescribed_time).fold(0.0, f64::max)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.file).expect("scenario serialization is infallible")
    }
}

fn build_agent(a: &AgentSpec, arena: &HyperRect, global: &[Obstacle]) -> Result<Agent, HarnessError> {
    let id = a.id;
    let wdim = arena.ndim();
    let mut problems = Vec::new();
    let start = rect(&a.initial, &format!("S{id}"))?;
    let target = rect(&a.target, &format!("T{id}"))?;
    for (label, r) in [("S", &start), ("T", &target)] {
        if r.ndim() != wdim {
            problems.push(format!("{label}{id} has {} dimensions, arena has {wdim}", r.ndim()));
        }
    }
    if a.dynamics == DynamicsKind::OmniRobot && wdim != 2 {
        problems.push(format!("agent {id}: omni robots need a 2-D arena"));
    }
    if !(a.prescribed_time_s.is_finite() && a.prescribed_time_s > 0.0) {
        problems.push(format!("agent {id}: prescribed_time_s must be positive"));
    }
    if !problems.is_empty() {
        return Err(HarnessError::Invalid(problems));
    }

    let (model, state_dim) = match a.dynamics {
        DynamicsKind::OmniRobot => (DynamicsModel::OmniRobot, 3),
        DynamicsKind::SingleIntegrator => (DynamicsModel::SingleIntegrator { n: wdim }, wdim),
    };
    let gains = broadcast(a.gains.as_deref().unwrap_or(&[1.0]), state_dim, "gains", id)?;
    let gains = ControllerGains::new(gains)
        .map_err(|e| HarnessError::Invalid(vec![format!("agent {id}: {e}")]))?;
    let disturbance_max = a
        .disturbance_max
        .as_deref()
        .map(|d| broadcast(d, state_dim, "disturbance_max", id))
        .transpose()?;
    if let Some(d) = &disturbance_max {
        if d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(HarnessError::Invalid(vec![format!(
                "agent {id}: disturbance_max must be non-negative"
            )]));
        }
    }
    let channel_map = match (a.channel_map, a.dynamics) {
        (ChannelMapKind::Identity, _) => ChannelMap::Identity,
        (ChannelMapKind::InverseRotation, DynamicsKind::OmniRobot) => ChannelMap::InverseRotation { heading: 2 },
        (ChannelMapKind::InverseRotation, _) => {
            return Err(HarnessError::Invalid(vec![format!(
                "agent {id}: inverse_rotation needs omni_robot dynamics"
            )]));
        }
    };

    let start = lift(&start, a.dynamics);
    let target = lift(&target, a.dynamics);
    let arena_l = lift(arena, a.dynamics);
    let mut obstacles = Vec::new();
    for o in global.iter() {
        obstacles.push(Obstacle::new(o.name.clone(), lift(&o.rect, a.dynamics)));
    }
    for o in &a.obstacles {
        let r = rect(&o.bounds, &format!("obstacle {}", o.name))?;
        if r.ndim() != wdim {
            return Err(HarnessError::Invalid(vec![format!(
                "obstacle {} of agent {id} has {} dimensions, arena has {wdim}",
                o.name,
                r.ndim()
            )]));
        }
        obstacles.push(Obstacle::new(o.name.clone(), lift(&r, a.dynamics)));
    }

    let x0 = match &a.initial_state {
        Some(x) => {
            if x.len() != state_dim {
                return Err(HarnessError::Invalid(vec![format!(
                    "agent {id}: initial_state has {} entries, expected {state_dim}",
                    x.len()
                )]));
            }
            if !start.contains_point_strictly(x) {
                return Err(HarnessError::Invalid(vec![format!(
                    "agent {id}: initial_state is not strictly inside S{id}"
                )]));
            }
            x.clone()
        }
        None => start.center(),
    };

    Ok(Agent {
        id: AgentId(id),
        kind: a.dynamics,
        model,
        state_dim,
        workspace_mask: (0..wdim).collect(),
        start,
        target,
        arena: arena_l,
        obstacles: ObstacleSet::new(AgentId(id), obstacles),
        prescribed_time: a.prescribed_time_s,
        gains,
        channel_map,
        disturbance_max,
        x0,
        width: a.width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"
version = 1
name = "two"

[arena]
bounds = [[0.0, 10.0], [0.0, 10.0]]

[[obstacles]]
name = "O1"
bounds = [[4.0, 5.0], [4.0, 5.0]]

[[agents]]
id = 1
dynamics = "omni_robot"
initial = [[0.0, 1.0], [0.0, 1.0]]
target = [[9.0, 10.0], [9.0, 10.0]]
prescribed_time_s = 20.0

[[agents]]
id = 2
dynamics = "omni_robot"
initial = [[9.0, 10.0], [0.0, 1.0]]
target = [[0.0, 1.0], [9.0, 10.0]]
prescribed_time_s = 20.0
"#;

    #[test]
    fn omni_robot_sets_are_lifted_with_heading() {
        let s = Scenario::from_toml(TWO).unwrap();
        assert_eq!(s.agents.len(), 2);
        let a = &s.agents[0];
        assert_eq!(a.state_dim, 3);
        assert_eq!(a.workspace_mask, vec![0, 1]);
        assert_eq!(a.start.dim(2).lo(), -PI);
        assert_eq!(a.obstacles.obstacles[0].rect.ndim(), 3);
        assert_eq!(a.x0, vec![0.5, 0.5, 0.0]);
        assert_eq!(a.gains.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn overlapping_targets_are_named() {
        let bad = TWO.replace("target = [[0.0, 1.0], [9.0, 10.0]]", "target = [[9.0, 10.0], [9.0, 10.0]]");
        match Scenario::from_toml(&bad) {
            Err(HarnessError::Invalid(v)) => assert!(v.iter().any(|m| m == "T1 ∩ T2 ≠ ∅"), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn start_inside_obstacle_is_named() {
        let bad = TWO.replace("bounds = [[4.0, 5.0], [4.0, 5.0]]", "bounds = [[0.5, 5.0], [0.5, 5.0]]");
        match Scenario::from_toml(&bad) {
            Err(HarnessError::Invalid(v)) => assert!(v.iter().any(|m| m == "S1 ∩ O1 ≠ ∅"), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_agent_list_is_rejected() {
        let text = "version = 1\n[arena]\nbounds = [[0.0, 1.0]]\n";
        assert!(matches!(Scenario::from_toml(text), Err(HarnessError::Invalid(_))));
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(matches!(
            Scenario::from_toml(&TWO.replace("version = 1", "version = 2")),
            Err(HarnessError::Invalid(_))
        ));
        assert!(matches!(
            Scenario::from_toml(&TWO.replace("name = \"two\"", "nmae = \"two\"")),
            Err(HarnessError::Parse { .. })
        ));
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::from_toml(TWO).unwrap();
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back.file, s.file);
    }
}
