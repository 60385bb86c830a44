//! Finite-horizon household model: steady state, stationary distribution,
//! budget-balancing equilibrium, and the two crisis variants.
//!
//! States are stored densely per age. A *slice* fixes
//! `(eta, education, marital, children, discount type)`; within an age the
//! layout is `(slice, nu, asset)` with assets varying fastest.

mod crisis;
mod distribution;
mod equilibrium;
pub mod export;
pub mod interp;
mod model;
mod params;
mod primitives;
mod store;
pub(crate) mod solver;

use thiserror::Error;

use crate::calibration::CalibrationError;

pub use crisis::{CashPolicy, Crisis2008, Crisis2021};
pub use distribution::{Distribution, StateSummary};
pub use equilibrium::{balance_budget_a2, solve_equilibrium, BudgetBalance, Equilibrium};
pub use model::{asset_grid, Layout, Model, SliceKey, CHILD_STATES};
pub use params::{Crisis2008Params, Crisis2021Params, EquilibriumParams, GridParams, ModelParams, TableOverrides};
pub use primitives::{household_size, tax, utility, welfare_equivalent};
pub use solver::{solve_steady_state, SteadyState};
pub use store::{has_equilibrium, load_equilibrium, save_equilibrium};

#[derive(Debug, Error)]
pub enum LifecycleError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no bracket for a2: revenue need {need} is at or above the cap {cap}")]
    NoBracket { need: f64, cap: f64 },
    #[error("missing continuation: {0}")]
    MissingContinuation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
