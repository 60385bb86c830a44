use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::{Distribution, StateSummary};
use super::model::Model;
use super::params::ModelParams;
use super::primitives::tax;
use super::solver::{solve_steady_state, SteadyState};
use super::LifecycleError;

/// Result of the tax-progressivity root find.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetBalance {
    pub a2: f64,
    pub revenue: f64,
    pub need: f64,
    pub iterations: usize,
}

const CHUNK: usize = 1 << 14;
const BUDGET_RTOL: f64 = 1e-6;

fn revenue(incomes: &[(f64, f64)], a0: f64, a1: f64, a2: f64) -> f64 {
    // Fixed chunks summed in order keep the result independent of the thread count.
    let parts: Vec<f64> = incomes
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&(y, w)| w * tax(y, a0, a1, a2)).sum())
        .collect();
    parts.iter().sum()
}

/// Finds `a2` such that aggregate taxes on the `(income, mass)` pairs equal
/// `need` within a relative tolerance of 1e-6, by bisection on a bracket
/// grown by doubling from `[0, 1]`.
pub fn balance_budget_a2(params: &ModelParams, incomes: &[(f64, f64)], need: f64) -> Result<BudgetBalance, LifecycleError> {
    let (a0, a1) = (params.a0, params.a1);
    if need <= 0.0 {
        return Ok(BudgetBalance { a2: 0.0, revenue: 0.0, need, iterations: 0 });
    }
    let cap: f64 = incomes.iter().map(|&(y, w)| a0 * y.max(0.0) * w).sum();
    if need >= cap {
        return Err(LifecycleError::NoBracket { need, cap });
    }
    let close = |r: f64| (r - need).abs() <= BUDGET_RTOL * need;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    let mut r_hi = revenue(incomes, a0, a1, hi);
    while r_hi < need {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        r_hi = revenue(incomes, a0, a1, hi);
        if !hi.is_finite() || iterations > 2000 {
            return Err(LifecycleError::NoBracket { need, cap });
        }
    }
    if close(r_hi) {
        return Ok(BudgetBalance { a2: hi, revenue: r_hi, need, iterations });
    }
    loop {
        iterations += 1;
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        let r = revenue(incomes, a0, a1, mid);
        if close(r) || iterations > 10_000 || mid == lo || mid == hi {
            return Ok(BudgetBalance { a2: mid, revenue: r, need, iterations });
        }
        if r < need {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Steady state consistent with the income normalization and a balanced budget.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub model: Model,
    pub steady: SteadyState,
    pub distribution: Distribution,
    pub summary: StateSummary,
    /// Government consumption plus Social Security at the solution.
    pub revenue_need: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Equilibrium {
    pub fn budget_gap(&self) -> f64 {
        (self.summary.tax_revenue - self.revenue_need) / self.revenue_need
    }
}

/// Solves the steady state. When `params.equilibrium.enabled`, alternates
/// between solving the household problem and updating `theta` (median income
/// target) and `a2` (government budget) until both conditions hold within the
/// configured tolerance.
pub fn solve_equilibrium(params: ModelParams) -> Result<Equilibrium, LifecycleError> {
    let eq = params.equilibrium.clone();
    let mut model = Model::new(params)?;
    let mut elasticity = 1.0;
    let mut last: Option<(f64, f64)> = None;
    let max_iterations = if eq.enabled { eq.max_iterations.max(1) } else { 1 };
    for it in 1..=max_iterations {
        let steady = solve_steady_state(&model)?;
        let distribution = Distribution::stationary(&model, &steady)?;
        let summary = distribution.summary(&model, &steady);
        let need = model.params.government_share * summary.gdp + summary.social_security;
        let theta = model.params.theta;
        let median_gap = summary.median_income / eq.median_income - 1.0;
        let budget_gap = (summary.tax_revenue - need) / need;
        info!(
            "iteration {it}: theta {theta:.6}, a2 {:.6}, median income {:.6}, budget gap {budget_gap:.2e}",
            model.params.a2, summary.median_income
        );
        let done = median_gap.abs() <= eq.tolerance && budget_gap.abs() <= eq.tolerance;
        if !eq.enabled || done || it == max_iterations {
            if eq.enabled && !done {
                warn!("equilibrium not reached after {it} iterations (median gap {median_gap:.2e}, budget gap {budget_gap:.2e})");
            }
            return Ok(Equilibrium {
                model,
                steady,
                distribution,
                summary,
                revenue_need: need,
                iterations: it,
                converged: !eq.enabled || done,
            });
        }
        if let Some((prev_theta, prev_median)) = last {
            let e = (summary.median_income / prev_median).ln() / (theta / prev_theta).ln();
            if e.is_finite() {
                elasticity = e.clamp(0.3, 1.5);
            }
        }
        last = Some((theta, summary.median_income));
        let new_theta = theta * (eq.median_income / summary.median_income).powf(1.0 / elasticity);
        let balance = balance_budget_a2(&model.params, &distribution.incomes(&model), need)?;
        model.set_fiscal(new_theta, balance.a2)?;
    }
    unreachable!("the loop returns on its last iteration")
}
