//! Multi-agent prescribed-time reach-avoid-stay planning with spatiotemporal tubes.
//!
//! The pipeline is:
//!
//! 1. [`tubes`]: per-agent reachability tubes from the initial set to the target set,
//!    bent around static obstacles.
//! 2. [`negotiation`]: token-passing negotiation that freezes a conflicting agent's
//!    tube just before a tube-tube conflict and replans its tail afterwards, until
//!    all tubes are pairwise disjoint.
//! 3. [`control`]: the closed-form funnel controller that keeps each state
//!    dimension inside its tube without any model of the plant.
//! 4. [`simulation`]: RK4 closed-loop simulation against the hidden plant with
//!    bounded disturbance, plus reach/avoid/stay and collision monitors.
//! 5. [`harness`]: scenario files, the planning/simulation pipeline and artifact I/O.

// NaN must fail validation, so bounds are checked as `!(a < b)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod control;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod negotiation;
pub mod scan;
pub mod simulation;
pub mod tubes;

pub use error::Error;

/// Agent identifier as it appears in scenario files and logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
