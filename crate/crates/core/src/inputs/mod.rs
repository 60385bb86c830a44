//! Group-level allocation inputs built from solved crisis policies.
//!
//! Households are grouped by pre-crisis income, age, marital status and
//! children. Each group's outcome at every transfer level is the expectation
//! over the group's pre-crisis population of the next-period crisis outcome,
//! weighted by survival.

mod conditionals;
mod groups;
mod increments;
mod mpc;
mod summary;

use thiserror::Error;

use crate::alloc::AllocError;
use crate::lifecycle::LifecycleError;

pub use conditionals::{group_conditionals, GroupConditionals};
pub use groups::{define_groups, GroupDefinition, GroupSet, GroupSpec};
pub use increments::{
    consumption_increments, finalize_matrix, levels_to_matrix, transfer_grid, welfare_increments, BetaRule,
    GroupLevels,
};
pub use mpc::{mpc_apc_table, write_mpc_table, MpcRow};
pub use summary::{read_group_summaries, write_group_summaries, GroupSummary};

#[derive(Debug, Error)]
pub enum InputsError {
    #[error("invalid group definition: {0}")]
    Overlap(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
