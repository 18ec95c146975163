use thiserror::Error;

use crate::control::ControlError;
use crate::geometry::GeometryError;
use crate::harness::HarnessError;
use crate::negotiation::NegotiationError;
use crate::simulation::SimulationError;
use crate::tubes::TubeError;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tube(#[from] TubeError),
    #[error(transparent)]
    Negotiation(#[from] NegotiationError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
