use log::warn;
use rayon::prelude::*;

use super::interp::Pchip;
use super::model::{Model, SliceKey, CHILD_STATES};
use super::primitives::{crra, household_size};
use super::LifecycleError;

/// Value, savings and consumption on the asset grid for every age.
#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Indexed by `j * per_age + layout.index(slice, nu, a)`.
    pub values: Vec<f64>,
    pub savings: Vec<f64>,
    pub consumption: Vec<f64>,
    /// States whose optimal savings reached the top of the asset grid.
    pub grid_escapes: usize,
    pub(crate) per_age: usize,
}

impl SteadyState {
    pub fn per_age(&self) -> usize {
        self.per_age
    }

    pub fn age_values(&self, j: usize) -> &[f64] {
        &self.values[j * self.per_age..(j + 1) * self.per_age]
    }

    pub fn age_savings(&self, j: usize) -> &[f64] {
        &self.savings[j * self.per_age..(j + 1) * self.per_age]
    }

    pub fn age_consumption(&self, j: usize) -> &[f64] {
        &self.consumption[j * self.per_age..(j + 1) * self.per_age]
    }
}

/// Averages next-age values over the spousal shock: returns `slices x n_a`.
pub(crate) fn integrate_nu(model: &Model, next: &[f64]) -> Vec<f64> {
    let l = model.layout;
    let mut out = vec![0.0; l.slices() * l.n_a];
    for s in 0..l.slices() {
        let row = &mut out[s * l.n_a..(s + 1) * l.n_a];
        for (nu, p) in model.nu.stationary.iter().enumerate() {
            let base = l.index(s, nu, 0);
            for (o, v) in row.iter_mut().zip(&next[base..base + l.n_a]) {
                *o += p * v;
            }
        }
    }
    out
}

/// Expectation over `eta'` and `k'` from age `j` of a next-age quantity
/// `w` laid out `slices x n_a`.
pub(crate) fn mix_transitions(model: &Model, j: usize, w: &[f64]) -> Vec<f64> {
    mix_transitions_wide(model, j, w, model.layout.n_a)
}

/// [`mix_transitions`] for rows of arbitrary `width` per slice.
pub(crate) fn mix_transitions_wide(model: &Model, j: usize, w: &[f64], width: usize) -> Vec<f64> {
    let l = model.layout;
    let mut out = vec![0.0; l.slices() * width];
    out.par_chunks_mut(width).enumerate().for_each(|(s, row)| {
        let key = l.key(s);
        let pk = model.child_transition(j, key.college, key.married, key.k);
        for (eta_next, pe) in model.eta.transition[key.eta].iter().enumerate() {
            if *pe == 0.0 {
                continue;
            }
            for (k_next, pkk) in pk.iter().enumerate().take(CHILD_STATES) {
                let p = pe * pkk;
                if p == 0.0 {
                    continue;
                }
                let s_next = l.slice(SliceKey { eta: eta_next, k: k_next, ..key });
                for (o, v) in row.iter_mut().zip(&w[s_next * width..(s_next + 1) * width]) {
                    *o += p * v;
                }
            }
        }
    });
    out
}

/// Expected continuation value per slice at age `j` given values at `j + 1`.
pub(crate) fn expected_continuation(model: &Model, j: usize, next_values: &[f64]) -> Vec<f64> {
    mix_transitions(model, j, &integrate_nu(model, next_values))
}

/// One-period problem: utility scale, discounting and continuation.
#[derive(Clone, Copy)]
pub(crate) struct Stage<'a> {
    /// `1 / sqrt(household size)`.
    pub scale: f64,
    pub gamma: f64,
    pub kappa: f64,
    /// `delta * psi_j`; zero means no continuation.
    pub beta: f64,
    pub ev: Option<&'a Pchip>,
    pub a_max: f64,
}

/// Optimal choice at a given cash on hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Choice {
    pub savings: f64,
    pub consumption: f64,
    pub value: f64,
    pub escaped: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

impl Stage<'_> {
    #[inline]
    pub fn objective(&self, cash: f64, savings: f64) -> f64 {
        let u = crra((cash - savings) * self.scale, self.gamma, self.kappa);
        match self.ev {
            Some(ev) if self.beta > 0.0 => u + self.beta * ev.eval(savings),
            _ => u,
        }
    }

    /// Maximizes over `a'` in `[0, min(cash - c_min, a_max)]` by golden-section
    /// search, keeping the better endpoint when it beats the interior optimum.
    pub fn choose(&self, cash: f64) -> Choice {
        let consume_all = |escaped| Choice { savings: 0.0, consumption: cash, value: self.objective(cash, 0.0), escaped };
        if self.ev.is_none() || self.beta <= 0.0 {
            return consume_all(false);
        }
        let c_min = 1e-10 * cash.max(1.0);
        let hi = (cash - c_min).min(self.a_max);
        if hi <= 0.0 {
            return consume_all(false);
        }
        let f = |s: f64| self.objective(cash, s);
        let (mut a, mut b) = (0.0, hi);
        let mut x1 = b - GOLDEN * (b - a);
        let mut x2 = a + GOLDEN * (b - a);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        let tol = 1e-10 * (1.0 + hi);
        while b - a > tol {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + GOLDEN * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - GOLDEN * (b - a);
                f1 = f(x1);
            }
        }
        let (mut best, mut best_v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        let f0 = f(0.0);
        if f0 >= best_v {
            best = 0.0;
            best_v = f0;
        }
        let top = f(hi);
        if top > best_v {
            best = hi;
            best_v = top;
        }
        Choice {
            savings: best,
            consumption: cash - best,
            value: best_v,
            escaped: hi == self.a_max && best >= self.a_max * (1.0 - 1e-9),
        }
    }
}

/// Per-slice continuation interpolants at age `j`, or `None` in the last period.
pub(crate) fn continuation_interpolants(model: &Model, j: usize, next_values: Option<&[f64]>) -> Option<Vec<Pchip>> {
    next_values.map(|next| {
        let ev = expected_continuation(model, j, next);
        ev.chunks(model.layout.n_a).map(|row| Pchip::new(&model.assets, row)).collect()
    })
}

pub(crate) fn stage<'a>(model: &Model, j: usize, slice: usize, kappa: f64, ev: Option<&'a [Pchip]>) -> Stage<'a> {
    let key = model.layout.key(slice);
    Stage {
        scale: 1.0 / household_size(key.married, key.k).sqrt(),
        gamma: model.params.gamma,
        kappa,
        beta: model.delta(key) * model.survival[j],
        ev: ev.map(|e| &e[slice]),
        a_max: model.params.grids.a_max,
    }
}

/// Solves age `j` on the asset grid with earnings scaled by `earnings_factor`.
/// Writes `(value, savings, consumption)` for every state of the age and
/// returns the number of grid escapes.
pub(crate) fn solve_age_on_assets(
    model: &Model,
    j: usize,
    ev: Option<&[Pchip]>,
    kappa: f64,
    earnings_factor: f64,
    out: (&mut [f64], &mut [f64], &mut [f64]),
) -> usize {
    let l = model.layout;
    let chunk = l.n_nu * l.n_a;
    let (values, savings, consumption) = out;
    values
        .par_chunks_mut(chunk)
        .zip(savings.par_chunks_mut(chunk))
        .zip(consumption.par_chunks_mut(chunk))
        .enumerate()
        .map(|(slice, ((v, s), c))| {
            let st = stage(model, j, slice, kappa, ev);
            let married = l.key(slice).married;
            let mut escapes = 0;
            for nu in 0..l.n_nu {
                let row = nu * l.n_a..(nu + 1) * l.n_a;
                if nu > 0 && !married {
                    // Spousal shocks do not affect singles.
                    v.copy_within(0..l.n_a, row.start);
                    s.copy_within(0..l.n_a, row.start);
                    c.copy_within(0..l.n_a, row.start);
                    continue;
                }
                for (i, &a) in model.assets.iter().enumerate() {
                    let ch = st.choose(model.cash(j, slice, nu, a, earnings_factor));
                    v[row.start + i] = ch.value;
                    s[row.start + i] = ch.savings;
                    c[row.start + i] = ch.consumption;
                    escapes += ch.escaped as usize;
                }
            }
            escapes
        })
        .sum()
}

/// Backward induction from the last age to the first.
pub fn solve_steady_state(model: &Model) -> Result<SteadyState, LifecycleError> {
    let periods = model.periods();
    let per_age = model.layout.per_age();
    let mut values = vec![0.0; periods * per_age];
    let mut savings = vec![0.0; periods * per_age];
    let mut consumption = vec![0.0; periods * per_age];
    let mut grid_escapes = 0;
    for j in (0..periods).rev() {
        let (head, tail) = values.split_at_mut((j + 1) * per_age);
        let next = (j + 1 < periods).then(|| &tail[..per_age]);
        let ev = continuation_interpolants(model, j, next);
        grid_escapes += solve_age_on_assets(
            model,
            j,
            ev.as_deref(),
            1.0,
            1.0,
            (
                &mut head[j * per_age..],
                &mut savings[j * per_age..(j + 1) * per_age],
                &mut consumption[j * per_age..(j + 1) * per_age],
            ),
        );
    }
    if grid_escapes > 0 {
        warn!("{grid_escapes} states chose savings at the top of the asset grid");
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LifecycleError::Domain("non-finite value in the steady-state solution".into()));
    }
    Ok(SteadyState { values, savings, consumption, grid_escapes, per_age })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consume_all_without_continuation() {
        let st = Stage { scale: 1.0, gamma: 2.0, kappa: 1.0, beta: 0.0, ev: None, a_max: 10.0 };
        let c = st.choose(1.7);
        assert_eq!((c.savings, c.consumption), (0.0, 1.7));
    }

    #[test]
    fn two_period_closed_form() {
        // max -1/c - b/a' with c + a' = x has a' = x sqrt(b) / (1 + sqrt(b)).
        let xs: Vec<f64> = (0..200).map(|i| 0.05 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|a| -1.0 / a).collect();
        let ev = Pchip::new(&xs, &ys);
        let st = Stage { scale: 1.0, gamma: 2.0, kappa: 1.0, beta: 0.81, ev: Some(&ev), a_max: 19.0 };
        let c = st.choose(4.0);
        assert!((c.savings - 4.0 * 0.9 / 1.9).abs() < 1e-3, "{}", c.savings);
        assert!((c.savings + c.consumption - 4.0).abs() < 1e-15);
    }
}
