use log::warn;

use super::groups::GroupSet;
use super::InputsError;
use crate::lifecycle::interp::lottery;
use crate::lifecycle::{household_size, Distribution, Model, SteadyState};

/// The pre-crisis population restricted to each group.
#[derive(Debug, Clone)]
pub struct GroupConditionals {
    pub groups: GroupSet,
    pub dollars_per_unit: f64,
    /// Population share of each group.
    pub masses: Vec<f64>,
    /// Mass-weighted mean pre-tax income in dollars (zero for empty groups).
    pub mean_income: Vec<f64>,
    /// Mass-weighted mean income tax in dollars.
    pub mean_tax: Vec<f64>,
    /// Mass-weighted mean household size.
    pub mean_size: Vec<f64>,
    /// `(state index, group, mass)`, sorted by state.
    memberships: Vec<(u32, u32, f64)>,
    /// Per current age: `(group, slice * n_a + asset node, weight)`, the
    /// survival-weighted mass each group sends to next period's asset nodes.
    landing: Vec<Vec<(u32, u32, f64)>>,
}

/// Part of a state's mass falling in one income bin.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    bin: usize,
    share: f64,
    /// Mean income and mean tax over the piece, in model units.
    income: f64,
    tax: f64,
}

/// Splits income `fixed + earnings * exp(t)`, `t` uniform on
/// `[-half, half]`, across the bins with lower edges `edges` (model units).
fn spread(fixed: f64, earnings: f64, half: f64, edges: &[f64], tax: impl Fn(f64) -> f64) -> Vec<Piece> {
    let y = |t: f64| fixed + earnings * t.exp();
    let point = |v: f64| Piece { bin: edges.partition_point(|e| *e <= v).saturating_sub(1), share: 1.0, income: v, tax: tax(v) };
    if !(earnings > 0.0 && half > 0.0) {
        return vec![point(fixed + earnings)];
    }
    let mut pieces = Vec::new();
    let mut t0 = -half;
    let mut bin = edges.partition_point(|e| *e <= y(t0)).saturating_sub(1);
    while t0 < half {
        let t1 = match edges.get(bin + 1) {
            Some(&hi) if hi < y(half) => ((hi - fixed) / earnings).ln().clamp(t0, half),
            _ => half,
        };
        if t1 > t0 {
            let width = t1 - t0;
            let mid = 0.5 * (t0 + t1);
            pieces.push(Piece {
                bin,
                share: width / (2.0 * half),
                income: fixed + earnings * (t1.exp() - t0.exp()) / width,
                tax: (tax(y(t0)) + 4.0 * tax(y(mid)) + tax(y(t1))) / 6.0,
            });
        }
        t0 = t1;
        bin += 1;
    }
    pieces
}

/// Assigns the pre-crisis population to groups by income (in dollars), age,
/// marital status and children, and records where each group's survivors
/// land on the asset grid next period.
pub fn group_conditionals(
    model: &Model,
    steady: &SteadyState,
    distribution: &Distribution,
    groups: &GroupSet,
    dollars_per_unit: f64,
) -> Result<GroupConditionals, InputsError> {
    if !(dollars_per_unit > 0.0) {
        return Err(InputsError::Invalid("dollars per model unit must be positive".into()));
    }
    let l = model.layout;
    let n = groups.len();
    let edges: Vec<f64> = groups.edges().iter().map(|e| e / dollars_per_unit).collect();
    let half = if groups.spread_productivity && model.eta.states.len() > 1 {
        0.5 * (model.eta.states[1] - model.eta.states[0])
    } else {
        0.0
    };
    let mut masses = vec![0.0; n];
    let mut income = vec![0.0; n];
    let mut taxes = vec![0.0; n];
    let mut sizes = vec![0.0; n];
    let mut memberships = Vec::new();
    let mut landing: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); model.periods()];
    let per_age = distribution.per_age();
    let mut unmatched = 0.0;
    distribution.for_each_state(model, |j, s, nu, a, mu| {
        let key = l.key(s);
        let capital = model.params.r * model.assets[a];
        let base = model.base_income(j, s, nu);
        let head = if model.is_worker(j) { model.head_income(j, key) } else { 0.0 };
        let idx = j * per_age + l.index(s, nu, a);
        let psi = model.survival[j];
        let (i, t) = lottery(&model.assets, steady.savings[idx]);
        let node = (s * l.n_a + i) as u32;
        for p in spread(capital + base - head, head, half, &edges, |y| model.tax(y)) {
            let Some(g) = groups.group_of_bin(p.bin, model.params.age_of(j), key.married, key.k) else {
                unmatched += mu * p.share;
                continue;
            };
            let w = mu * p.share;
            memberships.push((idx as u32, g as u32, w));
            masses[g] += w;
            income[g] += w * p.income * dollars_per_unit;
            taxes[g] += w * p.tax * dollars_per_unit;
            sizes[g] += w * household_size(key.married, key.k);
            if psi > 0.0 {
                landing[j].push((g as u32, node, w * psi * (1.0 - t)));
                landing[j].push((g as u32, node + 1, w * psi * t));
            }
        }
    });
    if unmatched > 0.0 {
        return Err(InputsError::Invalid(format!("population mass {unmatched} falls outside every group")));
    }
    for entries in &mut landing {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        entries.dedup_by(|next, kept| {
            if (next.0, next.1) == (kept.0, kept.1) {
                kept.2 += next.2;
                true
            } else {
                false
            }
        });
        entries.retain(|e| e.2 > 0.0);
    }
    memberships.sort_by_key(|e| e.0);
    let empty = masses.iter().filter(|m| **m == 0.0).count();
    if empty > 0 {
        warn!("{empty} of {n} groups have no households and are dropped");
    }
    for g in 0..n {
        if masses[g] > 0.0 {
            income[g] /= masses[g];
            taxes[g] /= masses[g];
            sizes[g] /= masses[g];
        }
    }
    Ok(GroupConditionals {
        groups: groups.clone(),
        dollars_per_unit,
        masses,
        mean_income: income,
        mean_tax: taxes,
        mean_size: sizes,
        memberships,
        landing,
    })
}

impl GroupConditionals {
    /// Indices of groups with positive mass.
    pub fn populated(&self) -> Vec<usize> {
        (0..self.masses.len()).filter(|&g| self.masses[g] > 0.0).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `(state index, weight)` pairs of group `g`, with weights summing to one.
    pub fn conditional(&self, g: usize) -> Vec<(usize, f64)> {
        let m = self.masses[g];
        self.memberships
            .iter()
            .filter(|e| e.1 as usize == g)
            .map(|e| (e.0 as usize, e.2 / m))
            .collect()
    }

    /// `(group, share of the state's mass)` for every group a state belongs to.
    pub fn groups_of(&self, state: usize) -> Vec<(usize, f64)> {
        let lo = self.memberships.partition_point(|e| (e.0 as usize) < state);
        let hi = self.memberships.partition_point(|e| (e.0 as usize) <= state);
        let total: f64 = self.memberships[lo..hi].iter().map(|e| e.2).sum();
        self.memberships[lo..hi].iter().map(|e| (e.1 as usize, e.2 / total)).collect()
    }

    pub(crate) fn landing(&self, j: usize) -> &[(u32, u32, f64)] {
        &self.landing[j]
    }
}
