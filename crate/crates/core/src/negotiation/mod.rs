//! Token-passing tube negotiation.
//!
//! Agents take turns as hub in token order. A hub whose tube meets a neighbour's
//! tube (on the shared workspace dimensions) computes its collision interval
//! `[t_lo, t_hi]`, freezes its tube at the cross-section it had just before
//! `t_lo` for the whole interval, and replans the remainder from the frozen box
//! to its target. Passes repeat until one full pass changes nothing.

mod log;
mod param;

pub use log::{Action, NegotiationLog, NegotiationRecord};
pub use param::{parameterize_tube, FreezeRecord, ParameterizedTube, ReplanContext};

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tubes::{Tube, TubeError};
use crate::{scan, AgentId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NegotiationError {
    #[error("agent {agent}: collision interval ends at {t_hi} s, no time left before the horizon {horizon} s")]
    CannotReplan {
        agent: AgentId,
        t_hi: f64,
        horizon: f64,
    },
    #[error("agent {agent}: tubes already intersect at t = 0")]
    CollisionAtStart { agent: AgentId },
    #[error("agent {agent}: {source}")]
    Tube {
        agent: AgentId,
        #[source]
        source: TubeError,
    },
    #[error("negotiation did not settle within {max_iter} passes")]
    NonTermination {
        max_iter: usize,
        log: Box<NegotiationLog>,
    },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("workspace masks of agents {a} and {b} have different lengths")]
    MaskMismatch { a: AgentId, b: AgentId },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Communication graph and token order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    agents: Vec<AgentId>,
    edges: BTreeSet<(AgentId, AgentId)>,
    token_order: Vec<AgentId>,
}

impl Topology {
    /// Every agent talks to every other; token passes in ascending id order.
    pub fn fully_connected(agents: &[AgentId]) -> Self {
        let mut sorted = agents.to_vec();
        sorted.sort();
        let mut edges = BTreeSet::new();
        for (n, &a) in sorted.iter().enumerate() {
            for &b in &sorted[n + 1..] {
                edges.insert((a, b));
            }
        }
        Self {
            agents: agents.to_vec(),
            edges,
            token_order: sorted,
        }
    }

    /// Explicit undirected edge list.
    pub fn with_edges(agents: &[AgentId], edges: &[(AgentId, AgentId)]) -> Result<Self, NegotiationError> {
        let mut topo = Self::fully_connected(agents);
        topo.edges.clear();
        for &(a, b) in edges {
            if a == b || !agents.contains(&a) || !agents.contains(&b) {
                return Err(NegotiationError::InvalidTopology(format!("bad edge ({a}, {b})")));
            }
            topo.edges.insert((a.min(b), a.max(b)));
        }
        Ok(topo)
    }

    /// Replaces the token order; must be a permutation of the agents.
    pub fn with_token_order(mut self, order: Vec<AgentId>) -> Result<Self, NegotiationError> {
        let mut a = order.clone();
        let mut b = self.agents.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(NegotiationError::InvalidTopology(
                "token order must visit every agent exactly once".into(),
            ));
        }
        self.token_order = order;
        Ok(self)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn token_order(&self) -> &[AgentId] {
        &self.token_order
    }

    pub fn connected(&self, a: AgentId, b: AgentId) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Neighbours of `agent`, ascending.
    pub fn neighbors(&self, agent: AgentId) -> Vec<AgentId> {
        let mut n: Vec<AgentId> = self
            .agents
            .iter()
            .copied()
            .filter(|&b| b != agent && self.connected(agent, b))
            .collect();
        n.sort();
        n
    }
}

/// Earliest and latest conflict times of one agent against its conflicting neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionInterval {
    pub agent: AgentId,
    pub t_lo: f64,
    pub t_hi: f64,
    pub neighbors: Vec<AgentId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegotiationParams {
    /// Freeze offset: the frozen cross-section is taken at `t_lo - delta`.
    pub delta: f64,
    /// Detection grid spacing.
    pub dt_check: f64,
    /// Length of the cross-fade into the frozen box, ending at `t_lo`.
    pub blend: f64,
    /// Maximum number of token passes.
    pub max_iter: usize,
}

impl NegotiationParams {
    /// Defaults for `agents` agents whose longest horizon is `horizon`:
    /// grid `horizon / 10⁴`, `delta = 2·dt`, `blend = 4·dt`, `10·N` passes.
    pub fn defaults(horizon: f64, agents: usize) -> Self {
        let dt_check = horizon / 1e4;
        Self {
            delta: 2.0 * dt_check,
            dt_check,
            blend: 4.0 * dt_check,
            max_iter: 10 * agents.max(1),
        }
    }

    fn validate(&self) -> Result<(), NegotiationError> {
        if !(self.dt_check > 0.0 && self.dt_check.is_finite()) {
            return Err(NegotiationError::InvalidParameter("dt_check must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(NegotiationError::InvalidParameter("delta must be positive"));
        }
        if !(self.blend >= 0.0 && self.blend.is_finite()) {
            return Err(NegotiationError::InvalidParameter("blend must be non-negative"));
        }
        if self.max_iter == 0 {
            return Err(NegotiationError::InvalidParameter("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Per-agent data needed to negotiate.
#[derive(Debug, Clone)]
pub struct NegotiationAgent {
    pub id: AgentId,
    /// State dimensions that take part in inter-agent collision checks.
    pub workspace_mask: Vec<usize>,
    pub replan: ReplanContext,
}

#[inline]
fn pair_overlaps(a: &Tube, ma: &[usize], b: &Tube, mb: &[usize], t: f64) -> bool {
    ma.iter().zip(mb).all(|(&ka, &kb)| {
        let (alo, ahi) = a.profile(ka).bounds(t);
        let (blo, bhi) = b.profile(kb).bounds(t);
        alo <= bhi && blo <= ahi
    })
}

fn common_window(a: &Tube, b: &Tube) -> (f64, f64) {
    (
        a.start_time().max(b.start_time()),
        a.horizon().min(b.horizon()),
    )
}

/// Conflict windows between two tubes on their workspace projections.
pub fn pair_conflict_windows(
    a: &Tube,
    mask_a: &[usize],
    b: &Tube,
    mask_b: &[usize],
    dt_check: f64,
) -> Vec<(f64, f64)> {
    let (t0, t1) = common_window(a, b);
    if t1 < t0 {
        return Vec::new();
    }
    scan::windows(t0, t1, dt_check, |t| pair_overlaps(a, mask_a, b, mask_b, t))
}

fn detect_among(
    hub: usize,
    tubes: &[&Tube],
    masks: &[Vec<usize>],
    neighbors: &[usize],
    ids: &[AgentId],
    dt_check: f64,
) -> Option<CollisionInterval> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut conflicting = Vec::new();
    for &j in neighbors {
        let w = pair_conflict_windows(tubes[hub], &masks[hub], tubes[j], &masks[j], dt_check);
        if let (Some(first), Some(last)) = (w.first(), w.last()) {
            lo = lo.min(first.0);
            hi = hi.max(last.1);
            conflicting.push(ids[j]);
        }
    }
    if conflicting.is_empty() {
        return None;
    }
    conflicting.sort();
    Some(CollisionInterval {
        agent: ids[hub],
        t_lo: lo,
        t_hi: hi,
        neighbors: conflicting,
    })
}

/// Collision interval of `agent` against every other tube in `tubes`.
///
/// `masks[k]` is the workspace mask of `tubes[k]`. Conflicts are located on a
/// grid of spacing `dt_check` and refined by bisection to 1e-6 s.
pub fn detect_collision_interval(
    agent: AgentId,
    tubes: &[Tube],
    masks: &[Vec<usize>],
    dt_check: f64,
) -> Option<CollisionInterval> {
    let hub = tubes.iter().position(|t| t.agent() == agent)?;
    let refs: Vec<&Tube> = tubes.iter().collect();
    let ids: Vec<AgentId> = tubes.iter().map(Tube::agent).collect();
    let neighbors: Vec<usize> = (0..tubes.len()).filter(|&j| j != hub).collect();
    detect_among(hub, &refs, masks, &neighbors, &ids, dt_check)
}

fn check_masks(ids: &[AgentId], masks: &[Vec<usize>]) -> Result<(), NegotiationError> {
    for (n, m) in masks.iter().enumerate().skip(1) {
        if m.len() != masks[0].len() {
            return Err(NegotiationError::MaskMismatch { a: ids[0], b: ids[n] });
        }
    }
    Ok(())
}

/// Algorithm: repeat token passes until a pass makes no update.
///
/// Each hub compares its current tube against the latest tubes of its
/// neighbours (including those updated earlier in the same pass).
pub fn negotiate(
    agents: &[NegotiationAgent],
    tubes: Vec<ParameterizedTube>,
    topology: &Topology,
    params: &NegotiationParams,
) -> Result<(Vec<ParameterizedTube>, NegotiationLog), NegotiationError> {
    params.validate()?;
    if agents.len() != tubes.len() {
        return Err(NegotiationError::InvalidTopology(
            "one tube per agent is required".into(),
        ));
    }
    let ids: Vec<AgentId> = agents.iter().map(|a| a.id).collect();
    let masks: Vec<Vec<usize>> = agents.iter().map(|a| a.workspace_mask.clone()).collect();
    check_masks(&ids, &masks)?;
    for (a, t) in agents.iter().zip(&tubes) {
        if a.id != t.agent() {
            return Err(NegotiationError::InvalidTopology(format!(
                "tube of agent {} supplied for agent {}",
                t.agent(),
                a.id
            )));
        }
    }
    let index_of = |id: AgentId| ids.iter().position(|&x| x == id);
    for &id in topology.token_order() {
        if index_of(id).is_none() {
            return Err(NegotiationError::InvalidTopology(format!(
                "agent {id} in token order has no tube"
            )));
        }
    }

    let mut tubes = tubes;
    let mut log = NegotiationLog::default();
    let mut iter = 0;
    let mut updated = true;
    while updated {
        iter += 1;
        if iter > params.max_iter {
            return Err(NegotiationError::NonTermination {
                max_iter: params.max_iter,
                log: Box::new(log),
            });
        }
        updated = false;
        for &hub_id in topology.token_order() {
            let hub = index_of(hub_id).expect("validated above");
            let neighbors: Vec<usize> = topology
                .neighbors(hub_id)
                .into_iter()
                .filter_map(index_of)
                .collect();
            let examined: Vec<String> = neighbors.iter().map(|&j| tubes[j].label()).collect();
            let current: Vec<&Tube> = tubes.iter().map(ParameterizedTube::tube).collect();
            let conflict = detect_among(hub, &current, &masks, &neighbors, &ids, params.dt_check);
            match conflict {
                None => log.push(NegotiationRecord {
                    iter,
                    hub: hub_id,
                    examined,
                    conflict_pair: Vec::new(),
                    t_lo: None,
                    t_hi: None,
                    action: Action::Kept,
                }),
                Some(interval) => {
                    let next = parameterize_tube(&tubes[hub], &interval, &agents[hub].replan, params)?;
                    tubes[hub] = next;
                    updated = true;
                    log.push(NegotiationRecord {
                        iter,
                        hub: hub_id,
                        examined,
                        conflict_pair: interval.neighbors.iter().map(|&j| [hub_id, j]).collect(),
                        t_lo: Some(interval.t_lo),
                        t_hi: Some(interval.t_hi),
                        action: Action::Parameterized,
                    });
                }
            }
        }
    }
    Ok((tubes, log))
}

/// First intersecting instant of one unordered agent pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub a: AgentId,
    pub b: AgentId,
    pub first_t: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessReport {
    pub pairs_checked: usize,
    pub intersecting_samples: usize,
    pub violations: Vec<PairViolation>,
}

impl DisjointnessReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every unordered pair of tubes for projected intersections on a grid of
/// spacing `dt_check` over their common horizon.
pub fn verify_disjointness(
    tubes: &[Tube],
    masks: &[Vec<usize>],
    dt_check: f64,
) -> Result<DisjointnessReport, NegotiationError> {
    if !(dt_check > 0.0 && dt_check.is_finite()) {
        return Err(NegotiationError::InvalidParameter("dt_check must be positive"));
    }
    let ids: Vec<AgentId> = tubes.iter().map(Tube::agent).collect();
    if masks.len() != tubes.len() {
        return Err(NegotiationError::InvalidParameter("one mask per tube is required"));
    }
    check_masks(&ids, masks)?;
    let pairs: Vec<(usize, usize)> = (0..tubes.len())
        .flat_map(|i| (i + 1..tubes.len()).map(move |j| (i, j)))
        .collect();
    let mut violations: Vec<PairViolation> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let (a, b) = (&tubes[i], &tubes[j]);
            let (t0, t1) = common_window(a, b);
            if t1 < t0 {
                return None;
            }
            let hit = |t: f64| pair_overlaps(a, &masks[i], b, &masks[j], t);
            let mut prev: Option<f64> = None;
            let mut first = None;
            let mut samples = 0;
            for t in scan::grid(t0, t1, dt_check) {
                if hit(t) {
                    samples += 1;
                    if first.is_none() {
                        first = Some(prev.map_or(t, |p| scan::bisect(p, t, &hit)));
                    }
                }
                prev = Some(t);
            }
            first.map(|first_t| PairViolation {
                a: ids[i],
                b: ids[j],
                first_t,
                samples,
            })
        })
        .collect();
    violations.sort_by_key(|v| (v.a, v.b));
    Ok(DisjointnessReport {
        pairs_checked: pairs.len(),
        intersecting_samples: violations.iter().map(|v| v.samples).sum(),
        violations,
    })
}
