//! Simulation and analysis toolkit for hierarchical microgrid control.
//!
//! A network of prosumer nodes runs a fast decentralized frequency
//! controller (droop plus leaky integrator) while a slow per-node
//! iterative learning controller schedules day-ahead power to absorb
//! the periodic part of the demand. The crate provides:
//!
//! - [`grid`]: network parameters, weighted Laplacian, and the linear
//!   compound plant (physics + low-level control as one system).
//! - [`demand`]: synthetic periodic demand and standard-load-profile
//!   traces, both seeded and reproducible.
//! - [`sim`]: stiff integration of the nonlinear closed loop over one
//!   or more daily cycles, measuring hourly low-level control energy.
//! - [`lifted`]: the cycle-domain map `y = P u + z` of the linearized
//!   plant, plus the zero-phase low-pass filter used by the learner.
//! - [`ilc`]: the cycle-to-cycle learning update and its scheduling
//!   contract.
//! - [`analysis`]: spectral-radius and singular-value convergence
//!   certificates swept over the learning gain.
//! - [`scenarios`]: canned experiment configurations used by the CLI
//!   and the acceptance suite.

pub mod analysis;
pub mod demand;
pub mod grid;
pub mod ilc;
pub mod lifted;
pub mod linalg;
pub mod scenarios;
pub mod sim;

pub use analysis::ConvergenceReport;
pub use demand::{DemandTrace, LoadProfileSpec, SyntheticDemandSpec};
pub use grid::{CompoundPlant, GridParams};
pub use ilc::{CyclePlan, IlcState};
pub use lifted::{LiftedFilters, LiftedSystem};
pub use scenarios::{RunSettings, ScenarioOutput, SummaryRow};
pub use sim::{CycleResult, PlantState, SolverConfig};

/// Hours per learning cycle; the lifted map is H·N dimensional.
pub const HOURS_PER_CYCLE: usize = 24;

/// Errors surfaced by construction and simulation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver failed at t = {t}: {reason}")]
    Solver { t: f64, reason: String },
    #[error("demand trace does not cover requested horizon: {0}")]
    Horizon(String),
    #[error("profile data error: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
