//! End-to-end experiments: the 2008 stimulus and 2021 welfare allocations,
//! REV comparisons against replicas of the enacted policies, and
//! perturbation bands.

mod bands;
mod config;
mod output;
mod policy;
mod run;

use thiserror::Error;

use crate::alloc::AllocError;
use crate::inputs::InputsError;
use crate::lifecycle::LifecycleError;

pub use bands::{perturbation_bands, quantile, Bands, BandsConfig, PerturbTarget};
pub use config::{Eligibility, InputsConfig, Scenario, ScenarioConfig, CAP_LADDER};
pub use output::{write_allocations, write_bands, write_rev_table, Summary};
pub use policy::{replica_dollars, upper_dollars};
pub use run::{build_inputs, rev_table, run_scenario, scenario_bands, scenario_matrix, AllocationRow, RevRow, ScenarioInputs, ScenarioResult};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Inputs(#[from] InputsError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
