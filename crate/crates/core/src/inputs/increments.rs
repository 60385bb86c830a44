use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditionals::GroupConditionals;
use super::InputsError;
use crate::alloc::{repair_inputs, validate_inputs, AllocError, GroupRecord, IncrementMatrix, ValidationReport};
use crate::lifecycle::solver::mix_transitions_wide;
use crate::lifecycle::{welfare_equivalent, Crisis2008, Crisis2021, LifecycleError, Model};

/// Group outcomes (in dollars) at every point of a transfer grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLevels {
    /// Populated group indices into the group set.
    pub groups: Vec<usize>,
    /// Transfer amounts in dollars, starting at 0.
    pub transfers: Vec<f64>,
    /// `levels[r * transfers.len() + d]` for the r-th populated group.
    pub levels: Vec<f64>,
}

impl GroupLevels {
    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.transfers.len();
        &self.levels[r * n..(r + 1) * n]
    }
}

/// Planner weight per group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    /// One per group.
    #[default]
    Unit,
    /// Household members, averaged within pooled cells.
    HouseholdSize,
}

fn check_grid(transfers: &[f64]) -> Result<(), InputsError> {
    if transfers.first() != Some(&0.0) {
        return Err(InputsError::Invalid("the transfer grid must start at 0".into()));
    }
    if transfers.windows(2).any(|w| !(w[0] < w[1])) || transfers.iter().any(|d| !d.is_finite()) {
        return Err(InputsError::Invalid("the transfer grid must be finite and increasing".into()));
    }
    Ok(())
}

/// Evenly spaced transfers `0, step, ..., levels * step`.
pub fn transfer_grid(step: f64, levels: usize) -> Vec<f64> {
    (0..=levels).map(|l| step * l as f64).collect()
}

/// Expected next-period outcome of every group. `outcome(j', s', nu', a, d, out)`
/// fills `out` with the crisis-period outcome at age `j'` for each transfer
/// `d` (model units), given assets `a` carried from the pre-crisis period.
fn aggregate<F>(model: &Model, cond: &GroupConditionals, transfers: &[f64], outcome: F) -> Result<GroupLevels, InputsError>
where
    F: Fn(usize, usize, usize, f64, &[f64], &mut [f64]) -> Result<(), LifecycleError> + Sync,
{
    check_grid(transfers)?;
    let l = model.layout;
    let n_d = transfers.len();
    let n_g = cond.masses.len();
    let units: Vec<f64> = transfers.iter().map(|d| d / cond.dollars_per_unit).collect();
    let pi_nu = &model.nu.stationary;
    let mut acc = vec![0.0; n_g * n_d];
    for j in 0..model.periods().saturating_sub(1) {
        let landing = cond.landing(j);
        if landing.is_empty() {
            continue;
        }
        let next = j + 1;
        let mut h = vec![0.0; l.slices() * l.n_a * n_d];
        h.par_chunks_mut(n_d).enumerate().try_for_each(|(node, row)| {
            let (s, i) = (node / l.n_a, node % l.n_a);
            let a = model.assets[i];
            let mut tmp = vec![0.0; n_d];
            if l.key(s).married {
                for (nu, p) in pi_nu.iter().enumerate() {
                    outcome(next, s, nu, a, &units, &mut tmp)?;
                    row.iter_mut().zip(&tmp).for_each(|(o, v)| *o += p * v);
                }
            } else {
                outcome(next, s, 0, a, &units, row)?;
            }
            Ok::<(), LifecycleError>(())
        })?;
        let g = mix_transitions_wide(model, j, &h, l.n_a * n_d);
        for &(group, node, w) in landing {
            let src = &g[node as usize * n_d..(node as usize + 1) * n_d];
            let dst = &mut acc[group as usize * n_d..(group as usize + 1) * n_d];
            dst.iter_mut().zip(src).for_each(|(o, v)| *o += w * v);
        }
    }
    let groups = cond.populated();
    let mut levels = Vec::with_capacity(groups.len() * n_d);
    for &g in &groups {
        let m = cond.masses[g];
        levels.extend(acc[g * n_d..(g + 1) * n_d].iter().map(|v| v / m * cond.dollars_per_unit));
    }
    Ok(GroupLevels { groups, transfers: transfers.to_vec(), levels })
}

/// Expected first-crisis-period consumption of each group's survivors, per
/// dollar transfer on the grid.
pub fn consumption_increments(
    model: &Model,
    crisis: &Crisis2008,
    cond: &GroupConditionals,
    transfers: &[f64],
) -> Result<GroupLevels, InputsError> {
    aggregate(model, cond, transfers, |j, s, nu, a, ds, out| {
        for (o, &d) in out.iter_mut().zip(ds) {
            *o = crisis.consumption(model, j, s, nu, a, d);
        }
        Ok(())
    })
}

/// Expected welfare equivalent of each group's survivors in the pandemic
/// period, mixing the unemployed and employed outcomes.
pub fn welfare_increments(
    model: &Model,
    crisis: &Crisis2021,
    cond: &GroupConditionals,
    transfers: &[f64],
) -> Result<GroupLevels, InputsError> {
    let gamma = model.params.gamma;
    aggregate(model, cond, transfers, |j, s, nu, a, ds, out| {
        let key = model.layout.key(s);
        let p = model.unemployment_2021(j, key.college, key.eta);
        for (o, &d) in out.iter_mut().zip(ds) {
            let w = welfare_equivalent(crisis.value(model, j, s, nu, a, d, false), gamma)?;
            *o = if p > 0.0 {
                let u = welfare_equivalent(crisis.value(model, j, s, nu, a, d, true), gamma)?;
                p * u + (1.0 - p) * w
            } else {
                w
            };
        }
        Ok(())
    })
}

/// Turns group levels into an allocation matrix with one increment per grid
/// step. Increments cost the group's population share, so budgets are in
/// per-capita increments.
pub fn levels_to_matrix(levels: &GroupLevels, cond: &GroupConditionals, beta: BetaRule) -> Result<IncrementMatrix, InputsError> {
    let mut records = Vec::with_capacity(levels.groups.len());
    for (r, &g) in levels.groups.iter().enumerate() {
        let row = levels.row(r);
        let weight = match beta {
            BetaRule::Unit => 1.0,
            BetaRule::HouseholdSize => cond.mean_size[g],
        };
        records.push(GroupRecord {
            id: cond.groups.groups[g].id,
            baseline: row[0],
            alphas: row.windows(2).map(|w| w[1] - w[0]).collect(),
            beta: weight,
            lower_bound: 0,
            mass: cond.masses[g],
            increment_cost: cond.masses[g],
        });
    }
    Ok(IncrementMatrix::new(records)?)
}

/// Validates the monotone-gain conditions. With `repair`, increasing gains
/// are clipped; otherwise any violation is an error.
pub fn finalize_matrix(
    matrix: IncrementMatrix,
    repair: bool,
    tolerance: f64,
) -> Result<(IncrementMatrix, ValidationReport), InputsError> {
    if repair {
        return Ok(repair_inputs(&matrix, tolerance)?);
    }
    let report = validate_inputs(&matrix, tolerance);
    if !report.is_clean() {
        return Err(AllocError::Assumption(report).into());
    }
    Ok((matrix, report))
}
