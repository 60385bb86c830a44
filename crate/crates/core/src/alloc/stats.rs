//! Statistics that are functions of the allocation queue.
//!
//! Gains are weighted by group mass, so with unit masses they are plain sums
//! over groups.

use std::cmp::Ordering;

use super::{allocate, budget_slack, compare_objectives, AllocError, AllocationMode, AllocationQueue, IncrementMatrix};

/// Resource-equivalent variation of an alternative allocation.
///
/// Returns the share of the alternative's budget `W°` that the queue could
/// save while still weakly matching the alternative's objective: the smallest
/// queue prefix whose objective reaches the alternative's costs
/// `W°(1 - REV)`. The result is clamped to `[0, 1]`.
pub fn rev(queue: &AllocationQueue, matrix: &IncrementMatrix, alt_counts: &[usize]) -> Result<f64, AllocError> {
    queue.check_matrix(matrix)?;
    let lambda = queue.lambda();
    matrix.check_allocation(alt_counts)?;
    let alt_cost = matrix.allocation_cost(alt_counts);
    if alt_cost <= 0.0 {
        return Ok(0.0);
    }
    // Prefix objectives are non-decreasing in prefix length.
    let reaches = |k: usize| -> Result<bool, AllocError> {
        Ok(compare_objectives(matrix, &queue.prefix_counts(k), alt_counts, lambda)? != Ordering::Less)
    };
    let (mut lo, mut hi) = (queue.mandatory_len(), queue.len());
    if !reaches(hi)? {
        // Only possible if the alternative is infeasible for the matrix.
        return Err(AllocError::InvalidArgument(
            "alternative exceeds the objective of the full queue".into(),
        ));
    }
    if reaches(lo)? {
        hi = lo;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let cost = matrix.allocation_cost(&queue.prefix_counts(hi));
    Ok((1.0 - cost / alt_cost).clamp(0.0, 1.0))
}

fn funded_gain(matrix: &IncrementMatrix, counts: &[usize]) -> f64 {
    matrix
        .groups()
        .iter()
        .zip(counts)
        .map(|(g, &d)| g.mass * g.alphas[..d].iter().sum::<f64>())
        .sum()
}

/// Increase in the aggregate outcome from the queue allocation at `W` over an alternative.
pub fn aggregate_gain(
    queue: &AllocationQueue,
    matrix: &IncrementMatrix,
    budget: f64,
    alt_counts: &[usize],
) -> Result<f64, AllocError> {
    matrix.check_allocation(alt_counts)?;
    let opt = allocate(queue, matrix, budget, AllocationMode::Stop)?;
    Ok(funded_gain(matrix, &opt.counts) - funded_gain(matrix, alt_counts))
}

fn funded_at(cumulative: f64, budget: f64) -> bool {
    cumulative <= budget + budget_slack(budget)
}

/// Gain from the queue entries funded by raising the budget from `W` to `W + ΔW`.
pub fn resource_increment_gain(
    queue: &AllocationQueue,
    matrix: &IncrementMatrix,
    budget: f64,
    delta: f64,
) -> Result<f64, AllocError> {
    queue.check_matrix(matrix)?;
    if !(delta >= 0.0) {
        return Err(AllocError::InvalidArgument(format!("budget increment {delta}")));
    }
    let top = budget + delta;
    let groups = matrix.groups();
    let mut cumulative = 0.0;
    let mut gain = 0.0;
    for e in queue.entries() {
        let g = &groups[e.group as usize];
        cumulative += g.increment_cost;
        if !funded_at(cumulative, top) {
            break;
        }
        if !funded_at(cumulative, budget) {
            gain += g.mass * g.alphas[e.increment as usize - 1];
        }
    }
    Ok(gain)
}

/// Elasticity of the aggregate outcome with respect to the budget.
pub fn elasticity(queue: &AllocationQueue, matrix: &IncrementMatrix, budget: f64, delta: f64) -> Result<f64, AllocError> {
    if !(budget > 0.0 && delta > 0.0) {
        return Err(AllocError::InvalidArgument(format!(
            "elasticity needs positive W and ΔW, got {budget} and {delta}"
        )));
    }
    let gain = resource_increment_gain(queue, matrix, budget, delta)?;
    let groups = matrix.groups();
    let mut outcome: f64 = groups.iter().map(|g| g.mass * g.baseline).sum();
    let mut cumulative = 0.0;
    for e in queue.entries() {
        let g = &groups[e.group as usize];
        cumulative += g.increment_cost;
        if !funded_at(cumulative, budget) {
            break;
        }
        outcome += g.mass * g.alphas[e.increment as usize - 1];
    }
    if outcome == 0.0 {
        return Err(AllocError::Domain("aggregate outcome is zero".into()));
    }
    Ok(gain / outcome * (budget / delta))
}

/// Gini coefficient `1 - 2/(N+1) * sum_r H_(r) (N + 1 - r) / sum H`, with
/// outcomes ranked ascending and ties given distinct ranks in input order.
pub fn gini(outcomes: &[f64]) -> Result<f64, AllocError> {
    if outcomes.is_empty() {
        return Err(AllocError::InvalidArgument("gini of an empty list".into()));
    }
    if outcomes.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(AllocError::Domain("outcomes must be finite and non-negative".into()));
    }
    let mut sorted = outcomes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(AllocError::Domain("outcomes sum to zero".into()));
    }
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, h)| h * (n - i as f64))
        .sum();
    Ok(1.0 - 2.0 / (n + 1.0) * weighted / total)
}
