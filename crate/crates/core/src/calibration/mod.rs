//! Statistical inputs of the household model: productivity chains, child
//! transitions, spousal income and the entry distribution.

mod children;
mod initial;
mod markov;
mod spousal;
pub mod tables;

use thiserror::Error;

pub use children::{child_transition, ChildTransitionCoeffs, CHILD_STATES};
pub use initial::{initial_distribution, InitialConditionsTable, InitialDistribution, BLOCK_RESCALE_LIMIT};
pub use markov::{tauchen, MarkovChain};
pub use spousal::{spousal_income, SpousalIncomeCoeffs};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("persistence must satisfy |rho| < 1, got {0}")]
    Persistence(f64),
    #[error("invalid calibration input: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("probabilities do not normalize: {0}")]
    Normalization(String),
    #[error("table error: {0}")]
    Table(String),
}
