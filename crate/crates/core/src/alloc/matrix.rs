//! Group-level inputs to the allocation problem.
//!
//! Each group carries a baseline outcome `A`, the per-increment gains
//! `alpha[0..D̄]`, a planner weight, bounds, and the population mass the
//! group represents. The matrix is the only thing the queue needs to know
//! about whatever model produced the gains.

use serde::{Deserialize, Serialize};

use super::AllocError;

pub type GroupId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub id: GroupId,
    /// Outcome with zero allocated increments.
    pub baseline: f64,
    /// Gain from the l-th increment is `alphas[l - 1]`; the upper bound is `alphas.len()`.
    pub alphas: Vec<f64>,
    pub beta: f64,
    pub lower_bound: usize,
    pub mass: f64,
    /// Budget units consumed by one increment for this group.
    pub increment_cost: f64,
}

impl GroupRecord {
    /// Unit mass and unit cost, no lower bound.
    pub fn unit(id: GroupId, baseline: f64, alphas: Vec<f64>, beta: f64) -> Self {
        Self {
            id,
            baseline,
            alphas,
            beta,
            lower_bound: 0,
            mass: 1.0,
            increment_cost: 1.0,
        }
    }

    pub fn upper_bound(&self) -> usize {
        self.alphas.len()
    }

    /// `A + alpha_1 + ... + alpha_d`.
    pub fn level(&self, d: usize) -> f64 {
        self.alphas[..d].iter().fold(self.baseline, |acc, a| acc + a)
    }

    /// Planner weight applied to the group's outcome in the CES index.
    pub fn objective_weight(&self) -> f64 {
        self.beta * self.mass
    }

    /// Planner weight per budget unit spent on the group.
    pub fn weight_per_cost(&self) -> f64 {
        self.beta * (self.mass / self.increment_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementMatrix {
    groups: Vec<GroupRecord>,
}

impl IncrementMatrix {
    /// Builds a matrix, sorting groups by id. Only structural checks happen
    /// here; the monotonicity conditions are checked by [`validate_inputs`].
    pub fn new(mut groups: Vec<GroupRecord>) -> Result<Self, AllocError> {
        groups.sort_by_key(|g| g.id);
        for pair in groups.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(AllocError::Malformed(format!("duplicate group id {}", pair[0].id)));
            }
        }
        for g in &groups {
            let bad = |what: &str| AllocError::Malformed(format!("group {}: {what}", g.id));
            if !g.baseline.is_finite() || g.alphas.iter().any(|a| !a.is_finite()) {
                return Err(bad("non-finite outcome"));
            }
            if !(g.beta > 0.0 && g.beta.is_finite()) {
                return Err(bad("beta must be positive"));
            }
            if !(g.mass > 0.0 && g.mass.is_finite()) {
                return Err(bad("mass must be positive"));
            }
            if !(g.increment_cost > 0.0 && g.increment_cost.is_finite()) {
                return Err(bad("increment cost must be positive"));
            }
            if g.lower_bound > g.upper_bound() {
                return Err(bad("lower bound exceeds upper bound"));
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[GroupRecord] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn index_of(&self, id: GroupId) -> Option<usize> {
        self.groups.binary_search_by_key(&id, |g| g.id).ok()
    }

    pub fn total_increments(&self) -> usize {
        self.groups.iter().map(|g| g.upper_bound()).sum()
    }

    /// Budget needed to fund an allocation, summed in group order.
    pub fn allocation_cost(&self, counts: &[usize]) -> f64 {
        self.groups
            .iter()
            .zip(counts)
            .map(|(g, &d)| d as f64 * g.increment_cost)
            .sum()
    }

    pub fn mandatory_cost(&self) -> f64 {
        self.groups.iter().map(|g| g.lower_bound as f64 * g.increment_cost).sum()
    }

    pub fn lower_bounds(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.lower_bound).collect()
    }

    pub fn upper_bounds(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.upper_bound()).collect()
    }

    /// Checks that `counts` is aligned with the groups and within bounds.
    pub fn check_allocation(&self, counts: &[usize]) -> Result<(), AllocError> {
        if counts.len() != self.groups.len() {
            return Err(AllocError::Malformed(format!(
                "allocation has {} entries for {} groups",
                counts.len(),
                self.groups.len()
            )));
        }
        for (g, &d) in self.groups.iter().zip(counts) {
            if d < g.lower_bound || d > g.upper_bound() {
                return Err(AllocError::OutOfBounds { group: g.id, count: d });
            }
        }
        Ok(())
    }

    pub fn map_groups(&self, f: impl FnMut(&GroupRecord) -> GroupRecord) -> Result<Self, AllocError> {
        Self::new(self.groups.iter().map(f).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonpositiveAlpha,
    IncreasingAlpha,
    NonpositiveA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub group: GroupId,
    /// 1-based increment index; 0 refers to the baseline.
    pub increment: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub repaired: bool,
    /// Total gain removed by clipping.
    pub repair_mass: f64,
    /// Total gain before clipping.
    pub alpha_mass: f64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn repair_fraction(&self) -> f64 {
        if self.alpha_mass > 0.0 {
            self.repair_mass / self.alpha_mass
        } else {
            0.0
        }
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Reports every violation of positivity and non-increasing gains.
///
/// An increase counts as a violation only when `alpha_l > alpha_{l-1} + tolerance`.
pub fn validate_inputs(matrix: &IncrementMatrix, tolerance: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    for g in matrix.groups() {
        if g.baseline <= 0.0 {
            report.violations.push(Violation {
                group: g.id,
                increment: 0,
                kind: ViolationKind::NonpositiveA,
            });
        }
        for (i, &a) in g.alphas.iter().enumerate() {
            report.alpha_mass += a.max(0.0);
            if a <= 0.0 {
                report.violations.push(Violation {
                    group: g.id,
                    increment: i + 1,
                    kind: ViolationKind::NonpositiveAlpha,
                });
            }
            if i > 0 && a > g.alphas[i - 1] + tolerance {
                report.violations.push(Violation {
                    group: g.id,
                    increment: i + 1,
                    kind: ViolationKind::IncreasingAlpha,
                });
            }
        }
    }
    report
}

/// Clips `alpha_l <- min(alpha_l, alpha_{l-1})` so the gains are non-increasing.
///
/// The report lists the violations found before clipping (at `tolerance`).
/// Sign violations cannot be clipped away and make this fail.
pub fn repair_inputs(
    matrix: &IncrementMatrix,
    tolerance: f64,
) -> Result<(IncrementMatrix, ValidationReport), AllocError> {
    let mut report = validate_inputs(matrix, tolerance);
    let sign_problems: Vec<Violation> = report
        .violations
        .iter()
        .filter(|v| v.kind != ViolationKind::IncreasingAlpha)
        .cloned()
        .collect();
    if !sign_problems.is_empty() {
        return Err(AllocError::Assumption(ValidationReport {
            violations: sign_problems,
            ..report
        }));
    }
    let mut removed = 0.0;
    let repaired = matrix.map_groups(|g| {
        let mut g = g.clone();
        for i in 1..g.alphas.len() {
            if g.alphas[i] > g.alphas[i - 1] {
                removed += g.alphas[i] - g.alphas[i - 1];
                g.alphas[i] = g.alphas[i - 1];
            }
        }
        g
    })?;
    report.repaired = true;
    report.repair_mass = removed;
    Ok((repaired, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(baseline: f64, alphas: Vec<f64>) -> IncrementMatrix {
        IncrementMatrix::new(vec![GroupRecord::unit(1, baseline, alphas, 1.0)]).unwrap()
    }

    #[test]
    fn monotone_gains_are_clean() {
        let r = validate_inputs(&one(1.0, vec![0.6, 0.5, 0.5]), 0.0);
        assert!(r.is_clean());
    }

    #[test]
    fn increasing_gain_is_reported_at_second_increment() {
        let r = validate_inputs(&one(1.0, vec![0.5, 0.6]), 0.0);
        assert_eq!(
            r.violations,
            vec![Violation { group: 1, increment: 2, kind: ViolationKind::IncreasingAlpha }]
        );
    }

    #[test]
    fn negative_baseline_is_reported() {
        let r = validate_inputs(&one(-1.0, vec![0.5]), 0.0);
        assert_eq!(r.count(ViolationKind::NonpositiveA), 1);
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn tolerance_absorbs_small_increases() {
        let r = validate_inputs(&one(1.0, vec![0.5, 0.5 + 1e-12]), 1e-9);
        assert!(r.is_clean());
    }

    #[test]
    fn repair_clips_to_running_minimum() {
        let (m, r) = repair_inputs(&one(1.0, vec![0.5, 0.6, 0.4, 0.45]), 0.0).unwrap();
        assert_eq!(m.groups()[0].alphas, vec![0.5, 0.5, 0.4, 0.4]);
        assert!(r.repaired);
        assert_eq!(r.count(ViolationKind::IncreasingAlpha), 2);
        assert!((r.repair_mass - 0.15).abs() < 1e-15);
        assert!(validate_inputs(&m, 0.0).is_clean());
    }

    #[test]
    fn repair_refuses_sign_violations() {
        assert!(matches!(
            repair_inputs(&one(1.0, vec![0.5, -0.1]), 0.0),
            Err(AllocError::Assumption(_))
        ));
    }

    #[test]
    fn structural_errors() {
        let mut g = GroupRecord::unit(1, 1.0, vec![0.5], 1.0);
        g.lower_bound = 2;
        assert!(IncrementMatrix::new(vec![g]).is_err());
        let dup = vec![
            GroupRecord::unit(1, 1.0, vec![0.5], 1.0),
            GroupRecord::unit(1, 1.0, vec![0.5], 1.0),
        ];
        assert!(IncrementMatrix::new(dup).is_err());
        assert!(IncrementMatrix::new(vec![GroupRecord::unit(1, 1.0, vec![0.5], 0.0)]).is_err());
    }

    #[test]
    fn groups_sorted_by_id() {
        let m = IncrementMatrix::new(vec![
            GroupRecord::unit(7, 1.0, vec![], 1.0),
            GroupRecord::unit(3, 1.0, vec![], 1.0),
        ])
        .unwrap();
        assert_eq!(m.groups()[0].id, 3);
        assert_eq!(m.index_of(7), Some(1));
    }
}
