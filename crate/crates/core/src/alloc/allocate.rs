use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{budget_slack, check_lambda, AllocError, AllocationQueue, GroupId, IncrementMatrix, LOG_KEY_THRESHOLD};

/// Default limit on the number of candidate allocations the exhaustive solver visits.
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMode {
    /// Stop at the first increment that does not fit. Allocations are nested in the budget.
    #[default]
    Stop,
    /// Skip increments that do not fit and keep walking the queue. Spends more of
    /// the budget when costs differ across groups, at the price of nestedness.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub group_ids: Vec<GroupId>,
    /// Increments per group, aligned with `group_ids`.
    pub counts: Vec<usize>,
    pub budget_used: f64,
    pub objective: f64,
}

impl AllocationResult {
    pub fn allocations(&self) -> BTreeMap<GroupId, usize> {
        self.group_ids.iter().copied().zip(self.counts.iter().copied()).collect()
    }

    pub fn count_for(&self, id: GroupId) -> Option<usize> {
        self.group_ids.binary_search(&id).ok().map(|i| self.counts[i])
    }
}

/// Funds the queue from the top until the budget runs out.
pub fn allocate(
    queue: &AllocationQueue,
    matrix: &IncrementMatrix,
    budget: f64,
    mode: AllocationMode,
) -> Result<AllocationResult, AllocError> {
    queue.check_matrix(matrix)?;
    if !budget.is_finite() {
        return Err(AllocError::InvalidArgument(format!("budget {budget}")));
    }
    let required = matrix.mandatory_cost();
    let slack = budget_slack(budget);
    if required > budget + slack {
        return Err(AllocError::InfeasibleLowerBounds { budget, required });
    }
    let groups = matrix.groups();
    let mut counts = vec![0usize; groups.len()];
    let mut used = 0.0;
    let entries = queue.entries();
    for e in &entries[..queue.mandatory_len()] {
        counts[e.group as usize] += 1;
        used += groups[e.group as usize].increment_cost;
    }
    for e in &entries[queue.mandatory_len()..] {
        let cost = groups[e.group as usize].increment_cost;
        if used + cost <= budget + slack {
            counts[e.group as usize] += 1;
            used += cost;
        } else if mode == AllocationMode::Stop {
            break;
        }
    }
    let objective = ces_objective(matrix, &counts, queue.lambda())?;
    Ok(AllocationResult {
        group_ids: groups.iter().map(|g| g.id).collect(),
        counts,
        budget_used: used,
        objective,
    })
}

/// CES index `(sum_g w_g H_g^lambda)^(1/lambda)` with `w_g = beta_g * mass_g`.
///
/// `lambda == 0` gives the weighted geometric mean. `counts` is aligned with
/// the matrix's groups.
pub fn ces_objective(matrix: &IncrementMatrix, counts: &[usize], lambda: f64) -> Result<f64, AllocError> {
    check_lambda(lambda)?;
    matrix.check_allocation(counts)?;
    let mut terms = Vec::with_capacity(counts.len());
    for (g, &d) in matrix.groups().iter().zip(counts) {
        let h = g.level(d);
        if h <= 0.0 {
            return Err(AllocError::Domain(format!("group {} has outcome {h}", g.id)));
        }
        terms.push((g.objective_weight(), h));
    }
    if terms.is_empty() {
        return Err(AllocError::Malformed("no groups".into()));
    }
    Ok(ces_index(&terms, lambda))
}

/// Compares the CES index of two allocations without forming either index.
///
/// Sums the per-group differences of `w_g H^lambda / lambda` (of `w_g ln H`
/// when `lambda == 0`), each taken from the gains that separate the two
/// counts, so increments that move the index by less than its rounding
/// error still decide the comparison.
pub fn compare_objectives(
    matrix: &IncrementMatrix,
    a: &[usize],
    b: &[usize],
    lambda: f64,
) -> Result<std::cmp::Ordering, AllocError> {
    check_lambda(lambda)?;
    matrix.check_allocation(a)?;
    matrix.check_allocation(b)?;
    // (sign, log magnitude) of each group's contribution.
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for (g, (&da, &db)) in matrix.groups().iter().zip(a.iter().zip(b)) {
        if da == db {
            continue;
        }
        let (lo, hi, sign) = if da > db { (db, da, 1.0) } else { (da, db, -1.0) };
        let base = g.level(lo);
        if base <= 0.0 {
            return Err(AllocError::Domain(format!("group {} has outcome {base}", g.id)));
        }
        let rise: f64 = g.alphas[lo..hi].iter().sum();
        let log_ratio = (rise / base).ln_1p();
        let w = g.objective_weight();
        let magnitude = if lambda == 0.0 {
            w.ln() + log_ratio.ln()
        } else {
            w.ln() + lambda * base.ln() + (lambda * log_ratio).exp_m1().abs().ln() - lambda.abs().ln()
        };
        terms.push((sign, magnitude));
    }
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    if terms.is_empty() || top == f64::NEG_INFINITY {
        return Ok(std::cmp::Ordering::Equal);
    }
    let total: f64 = terms.iter().map(|&(s, m)| s * (m - top).exp()).sum();
    Ok(total.partial_cmp(&0.0).expect("finite comparison terms"))
}

pub(crate) fn ces_index(terms: &[(f64, f64)], lambda: f64) -> f64 {
    if lambda == 0.0 {
        let total: f64 = terms.iter().map(|t| t.0).sum();
        let s: f64 = terms.iter().map(|&(w, h)| w * h.ln()).sum();
        (s / total).exp()
    } else if lambda == 1.0 {
        terms.iter().map(|&(w, h)| w * h).sum()
    } else if lambda.abs() <= LOG_KEY_THRESHOLD {
        let s: f64 = terms.iter().map(|&(w, h)| w * h.powf(lambda)).sum();
        s.powf(1.0 / lambda)
    } else {
        let logs: Vec<f64> = terms.iter().map(|&(w, h)| w.ln() + lambda * h.ln()).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logs.iter().map(|x| (x - top).exp()).sum::<f64>().ln();
        (lse / lambda).exp()
    }
}

pub fn brute_force_solve(matrix: &IncrementMatrix, budget: f64, lambda: f64) -> Result<AllocationResult, AllocError> {
    brute_force_solve_with_cap(matrix, budget, lambda, BRUTE_FORCE_CAP)
}

/// Enumerates every allocation within bounds and budget and keeps the best.
/// Ties keep the first allocation in odometer order.
pub fn brute_force_solve_with_cap(
    matrix: &IncrementMatrix,
    budget: f64,
    lambda: f64,
    cap: u128,
) -> Result<AllocationResult, AllocError> {
    check_lambda(lambda)?;
    let size = matrix
        .groups()
        .iter()
        .try_fold(1u128, |acc, g| acc.checked_mul(g.upper_bound() as u128 + 1))
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(AllocError::TooLarge { size, cap });
    }
    let required = matrix.mandatory_cost();
    let slack = budget_slack(budget);
    if required > budget + slack {
        return Err(AllocError::InfeasibleLowerBounds { budget, required });
    }
    let lower = matrix.lower_bounds();
    let upper = matrix.upper_bounds();
    let mut counts = lower.clone();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if matrix.allocation_cost(&counts) <= budget + slack {
            let obj = ces_objective(matrix, &counts, lambda)?;
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                best = Some((obj, counts.clone()));
            }
        }
        // Advance the odometer.
        let mut i = 0;
        loop {
            if i == counts.len() {
                let (objective, counts) = best.expect("lower bounds are feasible");
                return Ok(AllocationResult {
                    group_ids: matrix.groups().iter().map(|g| g.id).collect(),
                    budget_used: matrix.allocation_cost(&counts),
                    counts,
                    objective,
                });
            }
            if counts[i] < upper[i] {
                counts[i] += 1;
                break;
            }
            counts[i] = lower[i];
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::{build_queue, GroupRecord};

    fn unit(groups: Vec<(GroupId, f64, Vec<f64>)>) -> IncrementMatrix {
        IncrementMatrix::new(groups.into_iter().map(|(id, a, al)| GroupRecord::unit(id, a, al, 1.0)).collect()).unwrap()
    }

    fn two_group() -> IncrementMatrix {
        unit(vec![(1, 1.0, vec![0.9, 0.2]), (2, 1.0, vec![0.5, 0.4])])
    }

    #[test]
    fn slack_budget_fills_everything() {
        let m = two_group();
        let q = build_queue(&m, 1.0).unwrap();
        let r = allocate(&q, &m, 4.0, AllocationMode::Stop).unwrap();
        assert_eq!(r.counts, vec![2, 2]);
    }

    #[test]
    fn zero_budget_gives_baseline_objective() {
        let m = two_group();
        let q = build_queue(&m, -1.0).unwrap();
        let r = allocate(&q, &m, 0.0, AllocationMode::Stop).unwrap();
        assert_eq!(r.counts, vec![0, 0]);
        assert!((r.objective - 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_three_matches_enumeration() {
        let m = two_group();
        let q = build_queue(&m, 1.0).unwrap();
        let r = allocate(&q, &m, 3.0, AllocationMode::Stop).unwrap();
        assert_eq!(r.allocations(), BTreeMap::from([(1, 1), (2, 2)]));
        let b = brute_force_solve(&m, 3.0, 1.0).unwrap();
        assert_eq!(b.counts, vec![1, 2]);
    }

    #[test]
    fn ces_examples() {
        let single = unit(vec![(1, 2.0, vec![])]);
        for lambda in [1.0, 0.5, 0.0, -1.0, -99.0] {
            assert!((ces_objective(&single, &[0], lambda).unwrap() - 2.0).abs() < 1e-14);
        }
        let pair = unit(vec![(1, 1.0, vec![]), (2, 4.0, vec![])]);
        assert_eq!(ces_objective(&pair, &[0, 0], 1.0).unwrap(), 5.0);
        assert!((ces_objective(&pair, &[0, 0], -1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!((ces_objective(&pair, &[0, 0], 0.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn infeasible_lower_bounds() {
        let mut g = GroupRecord::unit(1, 1.0, vec![0.5, 0.4], 1.0);
        g.lower_bound = 2;
        let m = IncrementMatrix::new(vec![g]).unwrap();
        let q = build_queue(&m, 1.0).unwrap();
        assert!(matches!(
            allocate(&q, &m, 1.0, AllocationMode::Stop),
            Err(AllocError::InfeasibleLowerBounds { .. })
        ));
    }

    #[test]
    fn skip_mode_uses_leftover_budget() {
        let mut big = GroupRecord::unit(1, 1.0, vec![1.0], 1.0);
        big.increment_cost = 2.0;
        big.mass = 2.0;
        let m = IncrementMatrix::new(vec![big, GroupRecord::unit(2, 1.0, vec![0.4], 1.0)]).unwrap();
        let q = build_queue(&m, 1.0).unwrap();
        assert_eq!(allocate(&q, &m, 1.0, AllocationMode::Stop).unwrap().counts, vec![0, 0]);
        assert_eq!(allocate(&q, &m, 1.0, AllocationMode::Skip).unwrap().counts, vec![0, 1]);
    }

    #[test]
    fn brute_force_cap() {
        let m = unit((0..8).map(|i| (i, 1.0, vec![0.5; 9])).collect());
        assert!(matches!(brute_force_solve(&m, 5.0, 1.0), Err(AllocError::TooLarge { .. })));
    }

    #[test]
    fn brute_force_two_candidates_picks_larger_key() {
        let m = unit(vec![(1, 1.0, vec![0.3]), (2, 2.0, vec![0.3])]);
        let b = brute_force_solve(&m, 1.0, -1.0).unwrap();
        assert_eq!(b.counts, vec![1, 0]);
    }
}
