use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::AgentId;

/// Something noteworthy that happened during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// First sample inside the target set.
    Reach { agent: AgentId, t: f64 },
    /// Start of an episode in which dimension `dim` is on or outside its funnel.
    FunnelViolation {
        agent: AgentId,
        t: f64,
        dim: usize,
        error: f64,
    },
    /// Closest approach between two agents when it is within the separation radius.
    Collision {
        a: AgentId,
        b: AgentId,
        t: f64,
        distance: f64,
    },
}

/// Uniformly sampled closed-loop run of one agent, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub(super) agent: AgentId,
    pub(super) state_dim: usize,
    pub(super) input_dim: usize,
    pub(super) t: Vec<f64>,
    pub(super) x: Vec<f64>,
    pub(super) u: Vec<f64>,
    /// `lower, upper` per dimension, interleaved.
    pub(super) bounds: Vec<f64>,
    pub(super) contained: Vec<bool>,
    pub(super) events: Vec<Event>,
}

impl Trajectory {
    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.x[i * self.state_dim..(i + 1) * self.state_dim]
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.u[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// `[lower₁, upper₁, lower₂, upper₂, …]` at sample `i`.
    pub fn bounds(&self, i: usize) -> &[f64] {
        &self.bounds[2 * i * self.state_dim..2 * (i + 1) * self.state_dim]
    }

    pub fn contained(&self, i: usize) -> bool {
        self.contained[i]
    }

    pub fn all_contained(&self) -> bool {
        self.contained.iter().all(|&c| c)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn push_event(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn funnel_violations(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::FunnelViolation { .. }))
            .count()
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.state_dim).map(|k| format!("x{k}")));
        cols.extend((1..=self.input_dim).map(|k| format!("u{k}")));
        for k in 1..=self.state_dim {
            cols.push(format!("lower{k}"));
            cols.push(format!("upper{k}"));
        }
        cols.push("contained".into());
        cols.join(",")
    }

    /// Writes every `stride`-th sample (always including the last) as CSV.
    ///
    /// Floats use Rust's shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut w: W, stride: usize) -> io::Result<()> {
        let stride = stride.max(1);
        writeln!(w, "{}", self.csv_header())?;
        let last = self.len().saturating_sub(1);
        let mut line = String::new();
        for i in (0..self.len()).filter(|&i| i % stride == 0 || i == last) {
            use std::fmt::Write as _;
            line.clear();
            let _ = write!(line, "{}", self.t[i]);
            for v in self.state(i).iter().chain(self.input(i)).chain(self.bounds(i)) {
                let _ = write!(line, ",{v}");
            }
            let _ = write!(line, ",{}", u8::from(self.contained[i]));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
