use rayon::prelude::*;

use super::interp::{lerp, Pchip};
use super::model::{asset_grid, Model};
use super::primitives::crra;
use super::solver::{continuation_interpolants, solve_age_on_assets, stage, SteadyState};
use super::LifecycleError;

/// Savings as a function of cash on hand for every `(age, slice)`, solved on
/// a per-slice cash grid wide enough for every asset level, earnings scale
/// and transfer the caller will query. Values are recomputed from the
/// interpolated policy so that the budget identity holds exactly.
#[derive(Debug, Clone)]
pub struct CashPolicy {
    kappa: f64,
    n_x: usize,
    slices: usize,
    /// `(j * slices + slice) * n_x + i`.
    cash: Vec<f64>,
    savings: Vec<f64>,
    /// Continuation interpolant by `j * slices + slice`; `None` in the last period.
    continuation: Vec<Option<Pchip>>,
}

impl CashPolicy {
    /// `next_values(j)` returns the continuation values at age `j + 1`
    /// (laid out like one age of [`SteadyState`]), or `None` when `j` is the
    /// last period.
    pub(crate) fn solve<F>(model: &Model, kappa: f64, min_factor: f64, d_max: f64, next_values: F) -> Self
    where
        F: Fn(usize) -> Option<Vec<f64>> + Sync,
    {
        let l = model.layout;
        let slices = l.slices();
        let n_x = model.params.grids.n_cash;
        let a_max = model.params.grids.a_max;
        let unit = asset_grid(n_x, 1.0, model.params.grids.cash_curvature);
        let per_age: Vec<(Vec<f64>, Vec<f64>, Vec<Option<Pchip>>)> = (0..model.periods())
            .into_par_iter()
            .map(|j| {
                let next = next_values(j);
                let ev = continuation_interpolants(model, j, next.as_deref());
                let mut cash = Vec::with_capacity(slices * n_x);
                let mut savings = Vec::with_capacity(slices * n_x);
                for s in 0..slices {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for nu in 0..l.n_nu {
                        lo = lo.min(model.cash(j, s, nu, 0.0, min_factor).min(model.cash(j, s, nu, 0.0, 1.0)));
                        hi = hi.max(model.cash(j, s, nu, a_max, 1.0) + d_max);
                    }
                    let st = stage(model, j, s, kappa, ev.as_deref());
                    for u in &unit {
                        let x = lo + (hi - lo) * u;
                        cash.push(x);
                        savings.push(st.choose(x).savings);
                    }
                }
                let cont = match ev {
                    Some(v) => v.into_iter().map(Some).collect(),
                    None => vec![None; slices],
                };
                (cash, savings, cont)
            })
            .collect();
        let mut out = Self { kappa, n_x, slices, cash: Vec::new(), savings: Vec::new(), continuation: Vec::new() };
        for (c, s, e) in per_age {
            out.cash.extend(c);
            out.savings.extend(s);
            out.continuation.extend(e);
        }
        out
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Cash-on-hand nodes and savings at them for one `(age, slice)`.
    pub fn nodes(&self, j: usize, slice: usize) -> (&[f64], &[f64]) {
        let r = (j * self.slices + slice) * self.n_x..(j * self.slices + slice + 1) * self.n_x;
        (&self.cash[r.clone()], &self.savings[r])
    }

    #[inline]
    pub fn savings_at(&self, j: usize, slice: usize, x: f64) -> f64 {
        let (xs, ys) = self.nodes(j, slice);
        lerp(xs, ys, x).clamp(0.0, x.max(0.0))
    }

    #[inline]
    pub fn consumption_at(&self, j: usize, slice: usize, x: f64) -> f64 {
        x - self.savings_at(j, slice, x)
    }

    /// `kappa u(c) + delta psi_j E V'(a')` at the interpolated policy.
    pub fn value_at(&self, model: &Model, j: usize, slice: usize, x: f64) -> f64 {
        let a = self.savings_at(j, slice, x);
        let key = model.layout.key(slice);
        let scale = 1.0 / super::primitives::household_size(key.married, key.k).sqrt();
        let u = crra((x - a) * scale, model.params.gamma, self.kappa);
        match &self.continuation[j * self.slices + slice] {
            Some(ev) => u + model.delta(key) * model.survival[j] * ev.eval(a),
            None => u,
        }
    }
}

fn check_steady(model: &Model, steady: &SteadyState) -> Result<(), LifecycleError> {
    if steady.per_age != model.layout.per_age() || steady.values.len() != model.periods() * steady.per_age {
        return Err(LifecycleError::MissingContinuation(
            "steady-state solution does not match the model grids".into(),
        ));
    }
    Ok(())
}

/// `xi + b (1 - xi)` written so that `b = 1` gives exactly one.
fn earnings_factor(duration: f64, replacement: f64) -> f64 {
    1.0 - (1.0 - replacement) * duration
}

/// Great Recession: a rebate in the first crisis period, then unemployment
/// risk in the second, after which the steady state resumes.
#[derive(Debug, Clone)]
pub struct Crisis2008 {
    /// Earnings scale of the unemployed, `xi + b (1 - xi)`.
    pub earnings_factor: f64,
    /// Second-period solution when unemployed. The employed second-period
    /// problem is the steady state itself.
    pub unemployed: SteadyState,
    /// First-period policy, a function of cash on hand including the rebate.
    pub rebate: CashPolicy,
}

impl Crisis2008 {
    /// `d_max` is the largest rebate that will be queried, in model units.
    pub fn solve(model: &Model, steady: &SteadyState, d_max: f64) -> Result<Self, LifecycleError> {
        check_steady(model, steady)?;
        let c = &model.params.crisis2008;
        let factor = earnings_factor(c.unemployment_duration, c.replacement);
        let periods = model.periods();
        let per_age = steady.per_age;
        let mut values = vec![0.0; periods * per_age];
        let mut savings = vec![0.0; periods * per_age];
        let mut consumption = vec![0.0; periods * per_age];
        let mut escapes = 0;
        for j in 0..periods {
            let next = (j + 1 < periods).then(|| steady.age_values(j + 1));
            let ev = continuation_interpolants(model, j, next);
            let r = j * per_age..(j + 1) * per_age;
            escapes += solve_age_on_assets(
                model,
                j,
                ev.as_deref(),
                1.0,
                factor,
                (&mut values[r.clone()], &mut savings[r.clone()], &mut consumption[r]),
            );
        }
        let unemployed = SteadyState { values, savings, consumption, grid_escapes: escapes, per_age };
        let l = model.layout;
        let rebate = CashPolicy::solve(model, 1.0, 1.0, d_max, |j| {
            if j + 1 >= periods {
                return None;
            }
            let vu = unemployed.age_values(j + 1);
            let vw = steady.age_values(j + 1);
            let mut mixed = vec![0.0; per_age];
            for (idx, m) in mixed.iter_mut().enumerate() {
                let (s, _, _) = l.split(idx);
                let p = model.unemployment_2008(j + 1, l.key(s).college);
                *m = p * vu[idx] + (1.0 - p) * vw[idx];
            }
            Some(mixed)
        });
        Ok(Self { earnings_factor: factor, unemployed, rebate })
    }

    /// First-period cash on hand with rebate `d` at asset level `a`.
    pub fn cash(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64) -> f64 {
        model.cash(j, slice, nu, a, 1.0) + d
    }

    /// First-period consumption with rebate `d`.
    pub fn consumption(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64) -> f64 {
        self.rebate.consumption_at(j, slice, self.cash(model, j, slice, nu, a, d))
    }

    pub fn savings(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64) -> f64 {
        self.rebate.savings_at(j, slice, self.cash(model, j, slice, nu, a, d))
    }

    /// First-period value with rebate `d`.
    pub fn value(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64) -> f64 {
        self.rebate.value_at(model, j, slice, self.cash(model, j, slice, nu, a, d))
    }
}

/// Pandemic: unemployment risk, scaled-down marginal utility, and untaxed
/// checks in a single crisis period, after which the steady state resumes.
#[derive(Debug, Clone)]
pub struct Crisis2021 {
    pub earnings_factor: f64,
    /// Crisis-period policy shared by the employed and the unemployed, who
    /// differ only in cash on hand.
    pub pandemic: CashPolicy,
}

impl Crisis2021 {
    pub fn solve(model: &Model, steady: &SteadyState, d_max: f64) -> Result<Self, LifecycleError> {
        check_steady(model, steady)?;
        let c = &model.params.crisis2021;
        let factor = earnings_factor(c.unemployment_duration, c.replacement);
        let periods = model.periods();
        let pandemic = CashPolicy::solve(model, c.kappa, factor, d_max, |j| {
            (j + 1 < periods).then(|| steady.age_values(j + 1).to_vec())
        });
        Ok(Self { earnings_factor: factor, pandemic })
    }

    pub fn cash(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64, unemployed: bool) -> f64 {
        let f = if unemployed { self.earnings_factor } else { 1.0 };
        model.cash(j, slice, nu, a, f) + d
    }

    pub fn consumption(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64, unemployed: bool) -> f64 {
        self.pandemic.consumption_at(j, slice, self.cash(model, j, slice, nu, a, d, unemployed))
    }

    pub fn value(&self, model: &Model, j: usize, slice: usize, nu: usize, a: f64, d: f64, unemployed: bool) -> f64 {
        self.pandemic.value_at(model, j, slice, self.cash(model, j, slice, nu, a, d, unemployed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_replacement_factor_is_exact() {
        assert_eq!(earnings_factor(0.468, 1.0), 1.0);
        assert!((earnings_factor(0.468, 0.375) - (0.532 + 0.375 * 0.468)).abs() < 1e-15);
    }
}
