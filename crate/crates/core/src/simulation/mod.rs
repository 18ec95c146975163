//! Closed-loop simulation of the funnel controller against the plant.
//!
//! The plant ([`DynamicsModel`]) and the disturbance live only here; the
//! controller sees the state and the tube, nothing else.

mod disturbance;
mod dynamics;
mod fleet;
mod trajectory;

pub use disturbance::{Disturbance, DisturbanceProcess, DisturbanceSpec};
pub use dynamics::{step_dynamics, CustomAffine, DynamicsModel, Rk4};
pub use fleet::{simulate_fleet, FleetAgent, FleetReport, FleetRun, FleetSpec};
pub use trajectory::{Event, Trajectory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::Controller;
use crate::geometry::HyperRect;
use crate::tubes::{ObstacleSet, Tube};
use crate::AgentId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("state became non-finite at t = {t}")]
    NumericalBlowup { t: f64 },
    #[error("initial state {x0:?} is not strictly inside the tube at its start time")]
    InitialOutsideTube { x0: Vec<f64> },
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("agent {agent}: {source}")]
    Agent {
        agent: AgentId,
        #[source]
        source: Box<SimulationError>,
    },
}

impl SimulationError {
    fn for_agent(self, agent: AgentId) -> Self {
        SimulationError::Agent {
            agent,
            source: Box::new(self),
        }
    }
}

/// Integrates the closed loop on `[tube start, tube start + duration]` with step `dt`.
///
/// Samples are taken at `t_k = t_0 + k·dt`; the controller and the disturbance are
/// held over each step. Past the tube horizon the terminal cross-section is
/// tracked. Funnel violations are recorded as events and the run continues.
pub fn simulate_agent(
    model: &DynamicsModel,
    tube: &Tube,
    controller: &Controller,
    disturbance: &DisturbanceSpec,
    x0: &[f64],
    dt: f64,
    duration: f64,
) -> Result<Trajectory, SimulationError> {
    let agent = tube.agent();
    let n = model.state_dim();
    let m = model.input_dim();
    for (expected, got) in [
        (n, tube.ndim()),
        (n, x0.len()),
        (n, controller.gains().len()),
        (n, m),
        (n, disturbance.d_max.len()),
    ] {
        if expected != got {
            return Err(SimulationError::DimensionMismatch { expected, got });
        }
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimulationError::InvalidParameter("dt must be positive"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(SimulationError::InvalidParameter("duration must be positive"));
    }
    disturbance.validate()?;

    let t0 = tube.start_time();
    let mut bnd = Vec::with_capacity(n);
    tube.bounds_clamped(t0, &mut bnd);
    if !x0.iter().zip(&bnd).all(|(&x, &(lo, hi))| lo < x && x < hi) {
        return Err(SimulationError::InitialOutsideTube { x0: x0.to_vec() });
    }

    let steps = (duration / dt).round().max(1.0) as usize;
    let mut traj = Trajectory {
        agent,
        state_dim: n,
        input_dim: m,
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity((steps + 1) * n),
        u: Vec::with_capacity((steps + 1) * m),
        bounds: Vec::with_capacity((steps + 1) * 2 * n),
        contained: Vec::with_capacity(steps + 1),
        events: Vec::new(),
    };
    let mut x = x0.to_vec();
    let mut u = vec![0.0; m];
    let mut d = vec![0.0; n];
    let mut outside = vec![false; n];
    let mut rk4 = Rk4::new(n);
    let mut noise = Disturbance::new(disturbance, u64::from(agent.0));

    for k in 0..=steps {
        let t = t0 + k as f64 * dt;
        tube.bounds_clamped(t, &mut bnd);
        controller.evaluate(&x, &bnd, &mut u);
        let mut contained = true;
        for (dim, (&xk, &(lo, hi))) in x.iter().zip(&bnd).enumerate() {
            let inside = lo < xk && xk < hi;
            if !inside && !outside[dim] {
                traj.events.push(Event::FunnelViolation {
                    agent,
                    t,
                    dim,
                    error: (xk - 0.5 * (lo + hi)) / (0.5 * (hi - lo)),
                });
            }
            outside[dim] = !inside;
            contained &= inside;
        }
        traj.t.push(t);
        traj.x.extend_from_slice(&x);
        traj.u.extend_from_slice(&u);
        traj.bounds.extend(bnd.iter().flat_map(|&(lo, hi)| [lo, hi]));
        traj.contained.push(contained);
        if k == steps {
            break;
        }
        noise.sample(&mut d);
        rk4.step(model, &mut x, &u, &d, dt);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::NumericalBlowup { t: t + dt });
        }
    }
    Ok(traj)
}

/// Reach/avoid/stay outcome of one agent plus fleet-level collision data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasVerdict {
    pub agent: AgentId,
    pub reach: bool,
    /// First sample time inside the target.
    pub reach_time: Option<f64>,
    pub avoid: bool,
    pub avoid_violation: Option<f64>,
    /// Obstacle hit first, or `"arena"` when the state left the arena.
    pub avoid_witness: Option<String>,
    pub stay: bool,
    pub stay_violation: Option<f64>,
    /// Every sample strictly inside the tube.
    pub contained: bool,
    pub funnel_violations: usize,
    pub collision_free: bool,
    /// Smallest workspace distance to any other agent over the run.
    pub min_distance: Option<f64>,
}

impl RasVerdict {
    /// Reach, avoid, stay and collision avoidance all hold.
    pub fn satisfied(&self) -> bool {
        self.reach && self.avoid && self.stay && self.collision_free
    }
}

/// Evaluates reach (some sample with `t ≤ t_p` in the target), avoid (no sample
/// with `t ≤ t_p` in an obstacle or outside `arena`) and stay (every sample in
/// `[t_p, t_p + stay_window]` in the target).
pub fn evaluate_ras(
    traj: &Trajectory,
    target: &HyperRect,
    obstacles: &ObstacleSet,
    arena: Option<&HyperRect>,
    t_p: f64,
    stay_window: f64,
) -> RasVerdict {
    let mut reach_time = None;
    let mut avoid_violation = None;
    let mut avoid_witness = None;
    let mut stay_violation = None;
    for i in 0..traj.len() {
        let t = traj.time(i);
        let x = traj.state(i);
        if t <= t_p {
            if reach_time.is_none() && target.contains_point(x) {
                reach_time = Some(t);
            }
            if avoid_violation.is_none() {
                let hit = obstacles
                    .iter()
                    .find(|o| o.rect.contains_point(x))
                    .map(|o| o.name.clone())
                    .or_else(|| arena.filter(|a| !a.contains_point(x)).map(|_| "arena".to_string()));
                if hit.is_some() {
                    avoid_violation = Some(t);
                    avoid_witness = hit;
                }
            }
        }
        if t >= t_p && t <= t_p + stay_window && stay_violation.is_none() && !target.contains_point(x) {
            stay_violation = Some(t);
        }
    }
    let covers_stay = traj.times().last().is_some_and(|&t| t >= t_p + stay_window - 1e-9 * t_p.max(1.0));
    RasVerdict {
        agent: traj.agent(),
        reach: reach_time.is_some(),
        reach_time,
        avoid: avoid_violation.is_none(),
        avoid_violation,
        avoid_witness,
        stay: covers_stay && stay_violation.is_none(),
        stay_violation,
        contained: traj.all_contained(),
        funnel_violations: traj.funnel_violations(),
        collision_free: true,
        min_distance: None,
    }
}

#[cfg(test)]
mod tests;
