//! Simulation and cost-optimal planning of a resource-limited vaccination
//! program in the normalized SIRD epidemic model.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod model;
pub mod optimizer;

pub use error::{Error, Result};
pub use integrator::{integrate, EventKind, Tolerances, Trajectory};
pub use model::{
    AugmentedState, CostParams, EpidemicParams, Resources, Scenario, SirdState,
    VaccinationPolicy,
};
