use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// No conflict; the hub keeps its tube.
    Kept,
    /// The hub froze and replanned its tube.
    Parameterized,
}

/// One hub visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegotiationRecord {
    pub iter: usize,
    pub hub: AgentId,
    /// Neighbour tubes the hub received, e.g. `R̂1`, `R3`.
    pub examined: Vec<String>,
    /// `[hub, neighbour]` for every conflicting neighbour.
    pub conflict_pair: Vec<[AgentId; 2]>,
    pub t_lo: Option<f64>,
    pub t_hi: Option<f64>,
    pub action: Action,
}

/// Append-only record of a negotiation run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NegotiationLog {
    records: Vec<NegotiationRecord>,
}

impl NegotiationLog {
    pub fn push(&mut self, record: NegotiationRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[NegotiationRecord] {
        &self.records
    }

    pub fn passes(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn updates(&self) -> impl Iterator<Item = &NegotiationRecord> {
        self.records
            .iter()
            .filter(|r| r.action == Action::Parameterized)
    }

    /// Agents updated at least once, ascending.
    pub fn updated_agents(&self) -> Vec<AgentId> {
        let mut v: Vec<AgentId> = self.updates().map(|r| r.hub).collect();
        v.sort();
        v.dedup();
        v
    }

    /// True when the last pass recorded no update.
    pub fn settled(&self) -> bool {
        let last = self.passes();
        last > 0
            && self
                .records
                .iter()
                .filter(|r| r.iter == last)
                .all(|r| r.action == Action::Kept)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(Self { records })
    }
}
