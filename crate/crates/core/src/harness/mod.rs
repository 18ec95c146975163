//! Scenario files, the plan/simulate pipeline and run artifacts.
//!
//! A scenario is a versioned TOML file (see [`ScenarioFile`]) in meters and
//! seconds. [`plan`] builds, circumvents and negotiates the tubes;
//! [`fleet_spec`] and [`simulate`] run the closed loop; [`write_plan`] and
//! [`write_simulation`] persist everything so that [`verify_artifacts`] can
//! re-check a run without recomputing it.

mod artifacts;
mod pipeline;
mod scenario;

pub use artifacts::{
    default_output_dir, export_plot_data, load_plan, trajectory_path, verify_artifacts, write_atomic,
    write_plan, write_simulation, LoadedPlan, PlanSummary, SeedVerdicts, SimulationSummary, Summary,
    VerifyOutcome, EVENTS_FILE, NEGOTIATION_FILE, OUT_DIR_ENV, PLAN_REPORT_FILE, PLOT_DIR,
    SCENARIO_FILE, SUMMARY_FILE, TRAJECTORY_DIR, TUBES_POST_FILE, TUBES_PRE_FILE, VERDICTS_FILE,
};
pub use pipeline::{
    default_dt, fleet_spec, negotiation_agents, negotiation_params, plan, simulate, simulation_settings, topology,
    verify_plan, AgentValidity, Plan, PlanOverrides, PlanReport, SimulationOverrides,
    SimulationSettings,
};
pub use scenario::{
    Agent, AgentSpec, ArenaSpec, ChannelMapKind, DynamicsKind, NegotiationSpec, ObstacleSpec,
    Scenario, ScenarioFile, SimulationSpec, SCHEMA_VERSION,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::negotiation::NegotiationError;
use crate::simulation::SimulationError;
use crate::tubes::TubeError;
use crate::AgentId;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario{}: {message}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    Parse { path: Option<PathBuf>, message: String },
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("artifacts do not match the scenario: {0}")]
    Mismatch(String),
    #[error("agent {agent}: {source}")]
    Tube {
        agent: AgentId,
        #[source]
        source: TubeError,
    },
    #[error(transparent)]
    Negotiation(#[from] NegotiationError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
