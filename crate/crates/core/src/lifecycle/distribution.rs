use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interp::lottery;
use super::model::{Model, SliceKey, CHILD_STATES};
use super::solver::SteadyState;
use super::LifecycleError;

/// Stationary population measure on the solved grid, normalized to one.
#[derive(Debug, Clone)]
pub struct Distribution {
    /// Indexed like the policy arrays of [`SteadyState`].
    pub mass: Vec<f64>,
    per_age: usize,
}

/// Population aggregates of the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub mean_income: f64,
    pub median_income: f64,
    /// Household earnings plus capital income, excluding Social Security.
    pub gdp: f64,
    pub social_security: f64,
    pub tax_revenue: f64,
    pub mean_assets: f64,
    pub mean_consumption: f64,
}

impl Distribution {
    /// Entrants start with zero assets; survivors move along the savings
    /// policy with mass split between neighbouring asset nodes, and each
    /// cohort is smaller than the previous one by the cohort growth rate.
    pub fn stationary(model: &Model, steady: &SteadyState) -> Result<Self, LifecycleError> {
        let l = model.layout;
        let per_age = l.per_age();
        let periods = model.periods();
        let n_a = l.n_a;
        let mut mass = vec![0.0; periods * per_age];
        for s in 0..l.slices() {
            for nu in 0..l.n_nu {
                mass[l.index(s, nu, 0)] = model.entry_weight(s, nu);
            }
        }
        let growth = 1.0 + model.params.cohort_growth;
        for j in 0..periods - 1 {
            let scale = model.survival[j] / growth;
            let (now, next) = mass.split_at_mut((j + 1) * per_age);
            let now = &now[j * per_age..];
            let next = &mut next[..per_age];
            let savings = steady.age_savings(j);
            // Survivors' assets by current slice, before shocks.
            let mut landed = vec![0.0; l.slices() * n_a];
            for (idx, &mu) in now.iter().enumerate() {
                if mu == 0.0 {
                    continue;
                }
                let (s, _, _) = l.split(idx);
                let (i, t) = lottery(&model.assets, savings[idx]);
                landed[s * n_a + i] += mu * scale * (1.0 - t);
                landed[s * n_a + i + 1] += mu * scale * t;
            }
            next.par_chunks_mut(l.n_nu * n_a).enumerate().for_each(|(s_next, out)| {
                let key = l.key(s_next);
                for eta in 0..l.n_eta {
                    let pe = model.eta.transition[eta][key.eta];
                    for k in 0..CHILD_STATES {
                        let s = l.slice(SliceKey { eta, k, ..key });
                        let p = pe * model.child_transition(j, key.college, key.married, k)[key.k];
                        if p == 0.0 {
                            continue;
                        }
                        let row = &landed[s * n_a..(s + 1) * n_a];
                        for (nu, pn) in model.nu.stationary.iter().enumerate() {
                            for (o, m) in out[nu * n_a..(nu + 1) * n_a].iter_mut().zip(row) {
                                *o += p * pn * m;
                            }
                        }
                    }
                }
            });
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(LifecycleError::Domain(format!("population mass {total}")));
        }
        mass.iter_mut().for_each(|m| *m /= total);
        Ok(Self { mass, per_age })
    }

    pub(crate) fn from_mass(mass: Vec<f64>, per_age: usize) -> Self {
        Self { mass, per_age }
    }

    pub fn per_age(&self) -> usize {
        self.per_age
    }

    pub fn age_mass(&self, j: usize) -> &[f64] {
        &self.mass[j * self.per_age..(j + 1) * self.per_age]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Calls `f(j, slice, nu, asset_index, mass)` for every state with positive mass.
    pub fn for_each_state(&self, model: &Model, mut f: impl FnMut(usize, usize, usize, usize, f64)) {
        for (idx, &mu) in self.mass.iter().enumerate() {
            if mu > 0.0 {
                let j = idx / self.per_age;
                let (s, nu, a) = model.layout.split(idx % self.per_age);
                f(j, s, nu, a, mu);
            }
        }
    }

    /// Pre-tax steady-state income and mass for every populated state.
    pub fn incomes(&self, model: &Model) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        self.for_each_state(model, |j, s, nu, a, mu| out.push((model.income(j, s, nu, model.assets[a], 1.0), mu)));
        out
    }

    pub fn summary(&self, model: &Model, steady: &SteadyState) -> StateSummary {
        let mut s = StateSummary {
            mean_income: 0.0,
            median_income: 0.0,
            gdp: 0.0,
            social_security: 0.0,
            tax_revenue: 0.0,
            mean_assets: 0.0,
            mean_consumption: 0.0,
        };
        let mut incomes = Vec::new();
        self.for_each_state(model, |j, slice, nu, a, mu| {
            let assets = model.assets[a];
            let y = model.income(j, slice, nu, assets, 1.0);
            let key = model.layout.key(slice);
            let ss = if model.is_worker(j) { 0.0 } else { model.params.ss[key.education()] };
            s.mean_income += mu * y;
            s.gdp += mu * (y - ss);
            s.social_security += mu * ss;
            s.tax_revenue += mu * model.tax(y);
            s.mean_assets += mu * assets;
            s.mean_consumption += mu * steady.consumption[j * self.per_age + model.layout.index(slice, nu, a)];
            incomes.push((y, mu));
        });
        s.median_income = weighted_median(&mut incomes);
        s
    }
}

/// Lower weighted median of `(value, weight)` pairs.
pub(crate) fn weighted_median(pairs: &mut [(f64, f64)]) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(y, w) in pairs.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return y;
        }
    }
    pairs.last().map_or(f64::NAN, |p| p.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_weights() {
        let mut v = vec![(3.0, 0.2), (1.0, 0.2), (2.0, 0.2), (5.0, 0.4)];
        assert_eq!(weighted_median(&mut v), 3.0);
    }
}
