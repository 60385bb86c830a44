//! Optimal allocation queue for discrete increments under CES planner preferences.
//!
//! Given per-group baselines and non-increasing increment gains, ranking every
//! `(group, increment)` pair by its marginal contribution to the CES index and
//! funding the ranked list from the top solves the discrete allocation problem
//! for every budget at once. This module builds that ranking, walks it for a
//! given budget, and derives the misallocation and inequality statistics that
//! are functions of the ranking.

mod allocate;
pub mod io;
mod matrix;
mod queue;
mod stats;
pub mod synthetic;

use thiserror::Error;

pub use allocate::{
    allocate, brute_force_solve, brute_force_solve_with_cap, ces_objective, compare_objectives, AllocationMode,
    AllocationResult, BRUTE_FORCE_CAP,
};
pub use matrix::{
    repair_inputs, validate_inputs, GroupId, GroupRecord, IncrementMatrix, ValidationReport,
    Violation, ViolationKind,
};
pub use queue::{build_queue, marginal_key, AllocationQueue, KeyScale, QueueEntry, LOG_KEY_THRESHOLD};
pub use stats::{aggregate_gain, elasticity, gini, resource_increment_gain, rev};

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("allocation of {count} increments to group {group} is outside its bounds")]
    OutOfBounds { group: GroupId, count: usize },
    #[error("inputs violate the monotone-gain conditions ({} violations)", .0.violations.len())]
    Assumption(ValidationReport),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("lambda must be finite and at most 1, got {0}")]
    InvalidLambda(f64),
    #[error("budget {budget} cannot cover mandatory increments costing {required}")]
    InfeasibleLowerBounds { budget: f64, required: f64 },
    #[error("instance has {size} candidate allocations, above the enumeration cap {cap}")]
    TooLarge { size: u128, cap: u128 },
    #[error("queue was built for a different matrix")]
    QueueMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Relative slack used when comparing accumulated costs against a budget.
pub const BUDGET_RTOL: f64 = 1e-10;

pub(crate) fn budget_slack(budget: f64) -> f64 {
    BUDGET_RTOL * budget.abs().max(1.0)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), AllocError> {
    if lambda.is_finite() && lambda <= 1.0 {
        Ok(())
    } else {
        Err(AllocError::InvalidLambda(lambda))
    }
}
