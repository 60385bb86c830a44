use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_lambda, validate_inputs, AllocError, GroupId, GroupRecord, IncrementMatrix};

/// Above this |lambda| keys are ranked by their log-magnitude; direct powers
/// of levels far from 1 under- or overflow.
pub const LOG_KEY_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyScale {
    /// `priority` is the key itself (lambda >= 0) or its negation (lambda < 0).
    Linear,
    /// `priority` is `ln |key|`; keys are negative.
    Log,
}

impl KeyScale {
    pub fn for_lambda(lambda: f64) -> Self {
        if lambda < -LOG_KEY_THRESHOLD {
            KeyScale::Log
        } else {
            KeyScale::Linear
        }
    }
}

/// One `(group, increment)` pair. Higher `priority` is funded first.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueueEntry {
    pub priority: f64,
    /// Index of the group in the matrix (groups are stored sorted by id).
    pub group: u32,
    /// 1-based increment index.
    pub increment: u32,
}

#[derive(Debug, Clone)]
pub struct AllocationQueue {
    lambda: f64,
    scale: KeyScale,
    entries: Vec<QueueEntry>,
    mandatory_len: usize,
    group_ids: Vec<GroupId>,
}

/// Objective-gain key of the `l`-th increment:
/// `beta * [(A + sum_{s<=l} alpha_s)^lambda - (A + sum_{s<l} alpha_s)^lambda]`,
/// with the log-gain for `lambda == 0`.
///
/// For `lambda < -30` the returned value may underflow to `-0.0`; ranking uses
/// the log-magnitude instead (see [`AllocationQueue`]).
pub fn marginal_key(baseline: f64, alphas: &[f64], l: usize, beta: f64, lambda: f64) -> Result<f64, AllocError> {
    check_lambda(lambda)?;
    if l == 0 || l > alphas.len() {
        return Err(AllocError::InvalidArgument(format!(
            "increment {l} outside 1..={}",
            alphas.len()
        )));
    }
    let before = alphas[..l - 1].iter().fold(baseline, |acc, a| acc + a);
    let scale = KeyScale::for_lambda(lambda);
    let p = priority(before, alphas[l - 1], beta, lambda, scale)?;
    Ok(key_from_priority(p, lambda, scale))
}

fn priority(before: f64, alpha: f64, weight: f64, lambda: f64, scale: KeyScale) -> Result<f64, AllocError> {
    let after = before + alpha;
    if before <= 0.0 || after <= 0.0 {
        return Err(AllocError::Domain(format!(
            "non-positive outcome level ({before} -> {after})"
        )));
    }
    if lambda == 1.0 {
        return Ok(weight * alpha);
    }
    let rel = (alpha / before).ln_1p();
    Ok(match scale {
        KeyScale::Linear if lambda == 0.0 => weight * rel,
        KeyScale::Linear => {
            let key = weight * before.powf(lambda) * (lambda * rel).exp_m1();
            if lambda < 0.0 {
                -key
            } else {
                key
            }
        }
        KeyScale::Log => weight.ln() + lambda * before.ln() + (-(lambda * rel).exp_m1()).ln(),
    })
}

fn key_from_priority(p: f64, lambda: f64, scale: KeyScale) -> f64 {
    match scale {
        KeyScale::Linear if lambda < 0.0 => -p,
        KeyScale::Linear => p,
        KeyScale::Log => -p.exp(),
    }
}

fn group_priorities(g: &GroupRecord, index: u32, lambda: f64, scale: KeyScale, out: &mut [QueueEntry]) -> Result<(), AllocError> {
    let weight = g.weight_per_cost();
    let mut before = g.baseline;
    let mut prev = f64::INFINITY;
    for (l, (&alpha, slot)) in g.alphas.iter().zip(out.iter_mut()).enumerate() {
        // Clamp so rounding never ranks a later increment above an earlier one.
        let p = priority(before, alpha, weight, lambda, scale)?.min(prev);
        *slot = QueueEntry { priority: p, group: index, increment: (l + 1) as u32 };
        prev = p;
        before += alpha;
    }
    Ok(())
}

fn rank_order(a: &QueueEntry, b: &QueueEntry) -> std::cmp::Ordering {
    b.priority
        .total_cmp(&a.priority)
        .then(a.group.cmp(&b.group))
        .then(a.increment.cmp(&b.increment))
}

/// Ranks every increment of every group.
///
/// Increments below a group's lower bound are placed first, in
/// `(group_id, l)` order; the remaining increments follow in descending
/// priority with ties broken by `(group_id, l)`. The result does not depend
/// on any budget.
pub fn build_queue(matrix: &IncrementMatrix, lambda: f64) -> Result<AllocationQueue, AllocError> {
    check_lambda(lambda)?;
    let report = validate_inputs(matrix, 0.0);
    if !report.is_clean() {
        return Err(AllocError::Assumption(report));
    }
    if matrix.len() > u32::MAX as usize {
        return Err(AllocError::Malformed("too many groups".into()));
    }
    let scale = KeyScale::for_lambda(lambda);
    let total = matrix.total_increments();
    let mut all = vec![QueueEntry::default(); total];

    let mut slices = Vec::with_capacity(matrix.len());
    let mut rest: &mut [QueueEntry] = &mut all;
    for g in matrix.groups() {
        let (head, tail) = rest.split_at_mut(g.upper_bound());
        slices.push(head);
        rest = tail;
    }
    slices
        .into_par_iter()
        .zip(matrix.groups().par_iter())
        .enumerate()
        .try_for_each(|(i, (slot, g))| group_priorities(g, i as u32, lambda, scale, slot))?;

    // Pull mandatory increments out and compact the free ones in place, so
    // peak memory stays at one entry array.
    let mut mandatory = Vec::with_capacity(matrix.lower_bounds().iter().sum());
    let mut write = 0;
    let mut read = 0;
    for g in matrix.groups() {
        mandatory.extend_from_slice(&all[read..read + g.lower_bound]);
        let free = g.upper_bound() - g.lower_bound;
        all.copy_within(read + g.lower_bound..read + g.upper_bound(), write);
        write += free;
        read += g.upper_bound();
    }
    all[..write].par_sort_unstable_by(rank_order);
    let mandatory_len = mandatory.len();
    all.copy_within(0..write, mandatory_len);
    all[..mandatory_len].copy_from_slice(&mandatory);

    Ok(AllocationQueue {
        lambda,
        scale,
        entries: all,
        mandatory_len,
        group_ids: matrix.groups().iter().map(|g| g.id).collect(),
    })
}

impl AllocationQueue {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn scale(&self) -> KeyScale {
        self.scale
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of leading entries that are lower-bound pre-allocations.
    pub fn mandatory_len(&self) -> usize {
        self.mandatory_len
    }

    pub fn group_count(&self) -> usize {
        self.group_ids.len()
    }

    pub fn group_id(&self, entry: &QueueEntry) -> GroupId {
        self.group_ids[entry.group as usize]
    }

    /// The objective-gain key of an entry.
    pub fn key(&self, entry: &QueueEntry) -> f64 {
        key_from_priority(entry.priority, self.lambda, self.scale)
    }

    /// `(group_id, increment)` pairs in queue order.
    pub fn order(&self) -> Vec<(GroupId, usize)> {
        self.entries
            .iter()
            .map(|e| (self.group_id(e), e.increment as usize))
            .collect()
    }

    /// Allocation formed by the first `k` entries.
    pub fn prefix_counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0usize; self.group_ids.len()];
        for e in &self.entries[..k.min(self.entries.len())] {
            counts[e.group as usize] += 1;
        }
        counts
    }

    /// Running budget consumed after each entry.
    pub fn cumulative_costs(&self, matrix: &IncrementMatrix) -> Vec<f64> {
        let groups = matrix.groups();
        let mut acc = 0.0;
        self.entries
            .iter()
            .map(|e| {
                acc += groups[e.group as usize].increment_cost;
                acc
            })
            .collect()
    }

    /// 1-based queue position of every entry, indexed by group then increment.
    pub fn positions(&self, matrix: &IncrementMatrix) -> Vec<Vec<usize>> {
        let mut pos: Vec<Vec<usize>> = matrix.groups().iter().map(|g| vec![0; g.upper_bound()]).collect();
        for (rank, e) in self.entries.iter().enumerate() {
            pos[e.group as usize][e.increment as usize - 1] = rank + 1;
        }
        pos
    }

    pub(crate) fn check_matrix(&self, matrix: &IncrementMatrix) -> Result<(), AllocError> {
        let same = self.group_ids.len() == matrix.len()
            && matrix.groups().iter().zip(&self.group_ids).all(|(g, id)| g.id == *id)
            && self.entries.len() == matrix.total_increments();
        if same {
            Ok(())
        } else {
            Err(AllocError::QueueMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(groups: Vec<(GroupId, f64, Vec<f64>)>) -> IncrementMatrix {
        IncrementMatrix::new(groups.into_iter().map(|(id, a, al)| GroupRecord::unit(id, a, al, 1.0)).collect()).unwrap()
    }

    #[test]
    fn linear_key_is_alpha() {
        assert_eq!(marginal_key(1.0, &[1.0], 1, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn harmonic_key() {
        let k = marginal_key(1.0, &[1.0], 1, 1.0, -1.0).unwrap();
        assert!((k - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn square_root_key_matches_high_precision_value() {
        // 0.5 * (sqrt(4) - sqrt(3)) evaluated at 40 digits.
        let k = marginal_key(2.0, &[1.0, 1.0], 2, 0.5, 0.5).unwrap();
        assert!((k - 0.133_974_596_215_561_35).abs() < 1e-15);
    }

    #[test]
    fn log_key_for_zero_lambda() {
        let k = marginal_key(1.0, &[1.0], 1, 2.0, 0.0).unwrap();
        assert!((k - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn extreme_lambda_ranks_without_overflow() {
        // 0.01^-99 overflows f64; the log-scale ranking must still order correctly.
        let m = unit(vec![(1, 0.01, vec![0.01]), (2, 0.02, vec![0.01])]);
        let q = build_queue(&m, -99.0).unwrap();
        assert_eq!(q.scale(), KeyScale::Log);
        assert_eq!(q.order(), vec![(1, 1), (2, 1)]);
        assert!(q.entries().iter().all(|e| e.priority.is_finite()));
    }

    #[test]
    fn key_domain_error() {
        assert!(matches!(marginal_key(-2.0, &[1.0], 1, 1.0, 0.5), Err(AllocError::Domain(_))));
        assert!(marginal_key(1.0, &[1.0], 2, 1.0, 0.5).is_err());
        assert!(marginal_key(1.0, &[1.0], 1, 1.0, 1.5).is_err());
    }

    #[test]
    fn single_group_queue() {
        let q = build_queue(&unit(vec![(1, 1.0, vec![3.0, 2.0, 1.0])]), 1.0).unwrap();
        assert_eq!(q.order(), vec![(1, 1), (1, 2), (1, 3)]);
    }

    #[test]
    fn two_group_linear_queue_sorts_by_alpha() {
        let m = unit(vec![(1, 1.0, vec![0.9, 0.2]), (2, 1.0, vec![0.5, 0.4])]);
        let q = build_queue(&m, 1.0).unwrap();
        assert_eq!(q.order(), vec![(1, 1), (2, 1), (2, 2), (1, 2)]);
    }

    #[test]
    fn ties_break_by_group_then_increment() {
        let m = unit(vec![(5, 1.0, vec![0.5, 0.5]), (2, 1.0, vec![0.5])]);
        let q = build_queue(&m, 1.0).unwrap();
        assert_eq!(q.order(), vec![(2, 1), (5, 1), (5, 2)]);
    }

    #[test]
    fn lower_bounds_go_first() {
        let mut low = GroupRecord::unit(2, 1.0, vec![0.1, 0.05], 1.0);
        low.lower_bound = 1;
        let m = IncrementMatrix::new(vec![GroupRecord::unit(1, 1.0, vec![0.9], 1.0), low]).unwrap();
        let q = build_queue(&m, 1.0).unwrap();
        assert_eq!(q.mandatory_len(), 1);
        assert_eq!(q.order(), vec![(2, 1), (1, 1), (2, 2)]);
    }

    #[test]
    fn rejects_violations() {
        let m = unit(vec![(1, 1.0, vec![0.2, 0.3])]);
        assert!(matches!(build_queue(&m, 1.0), Err(AllocError::Assumption(_))));
    }

    #[test]
    fn positions_are_one_based() {
        let m = unit(vec![(1, 1.0, vec![0.9, 0.2]), (2, 1.0, vec![0.5, 0.4])]);
        let q = build_queue(&m, 1.0).unwrap();
        assert_eq!(q.positions(&m), vec![vec![1, 4], vec![2, 3]]);
        assert_eq!(q.cumulative_costs(&m), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
