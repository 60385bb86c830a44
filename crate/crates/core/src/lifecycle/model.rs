use std::path::PathBuf;

use super::params::ModelParams;
use super::primitives::tax;
use super::LifecycleError;
use crate::calibration::tables::{
    AgeBandTable, AgeTable, EMBEDDED_CHILD_TRANSITIONS, EMBEDDED_INITIAL_CONDITIONS, EMBEDDED_LABOR_PRODUCTIVITY,
    EMBEDDED_SPOUSAL_INCOME, EMBEDDED_SURVIVAL, EMBEDDED_UNEMPLOYMENT_2008, EMBEDDED_UNEMPLOYMENT_2021,
};
use crate::calibration::{
    child_transition, initial_distribution, spousal_income, tauchen, ChildTransitionCoeffs, InitialConditionsTable,
    InitialDistribution, MarkovChain, SpousalIncomeCoeffs,
};

pub use crate::calibration::CHILD_STATES;

/// Discrete part of a household state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SliceKey {
    pub eta: usize,
    pub college: bool,
    pub married: bool,
    pub k: usize,
    /// High discount factor.
    pub patient: bool,
}

impl SliceKey {
    pub fn education(&self) -> usize {
        self.college as usize
    }
}

/// Dense index arithmetic for one age.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_eta: usize,
    pub n_nu: usize,
    pub n_a: usize,
}

impl Layout {
    pub fn slices(&self) -> usize {
        self.n_eta * 2 * 2 * CHILD_STATES * 2
    }

    /// States per age.
    pub fn per_age(&self) -> usize {
        self.slices() * self.n_nu * self.n_a
    }

    pub fn slice(&self, key: SliceKey) -> usize {
        (((key.eta * 2 + key.college as usize) * 2 + key.married as usize) * CHILD_STATES + key.k) * 2
            + key.patient as usize
    }

    pub fn key(&self, slice: usize) -> SliceKey {
        let patient = slice % 2 == 1;
        let rest = slice / 2;
        let k = rest % CHILD_STATES;
        let rest = rest / CHILD_STATES;
        SliceKey { eta: rest / 4, college: (rest / 2) % 2 == 1, married: rest % 2 == 1, k, patient }
    }

    /// Position of `(slice, nu, asset)` within an age.
    #[inline]
    pub fn index(&self, slice: usize, nu: usize, a: usize) -> usize {
        (slice * self.n_nu + nu) * self.n_a + a
    }

    /// Inverse of [`Layout::index`].
    pub fn split(&self, index: usize) -> (usize, usize, usize) {
        let a = index % self.n_a;
        let rest = index / self.n_a;
        (rest / self.n_nu, rest % self.n_nu, a)
    }
}

/// Exponentially spaced grid on `[0, top]` with `n` points; larger
/// `curvature` packs more points near zero.
pub fn asset_grid(n: usize, top: f64, curvature: f64) -> Vec<f64> {
    let denom = curvature.exp_m1();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                top
            } else {
                top * (curvature * i as f64 / (n - 1) as f64).exp_m1() / denom
            }
        })
        .collect()
}

/// Parameters together with every derived table the solvers need.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub layout: Layout,
    pub assets: Vec<f64>,
    pub eta: MarkovChain,
    /// Spousal log-productivity, drawn independently every period.
    pub nu: MarkovChain,
    /// Survival to the next period by age index; zero in the last period.
    pub survival: Vec<f64>,
    pub initial: InitialDistribution,
    productivity: Vec<[f64; 2]>,
    children: Vec<[[[[f64; CHILD_STATES]; CHILD_STATES]; 2]; 2]>,
    unemployment_2008: Vec<[f64; 2]>,
    unemployment_2021: Vec<[f64; 2]>,
    spousal: SpousalIncomeCoeffs,
    /// Non-capital pre-tax income by `(age, slice, nu)`.
    base_income: Vec<f64>,
}

fn load(path: &Option<PathBuf>, embedded: &str) -> Result<String, LifecycleError> {
    match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| LifecycleError::Config(format!("cannot read table {}: {e}", p.display()))),
        None => Ok(embedded.to_string()),
    }
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self, LifecycleError> {
        params.validate()?;
        let t = &params.tables;
        let survival_table = AgeTable::from_csv(&load(&t.survival, EMBEDDED_SURVIVAL)?)?;
        let labor_table = AgeTable::from_csv(&load(&t.labor_productivity, EMBEDDED_LABOR_PRODUCTIVITY)?)?;
        let child_coeffs = ChildTransitionCoeffs::from_csv(&load(&t.child_transitions, EMBEDDED_CHILD_TRANSITIONS)?)?;
        let spousal = SpousalIncomeCoeffs::from_csv(&load(&t.spousal_income, EMBEDDED_SPOUSAL_INCOME)?)?;
        let initial_table = InitialConditionsTable::from_csv(&load(&t.initial_conditions, EMBEDDED_INITIAL_CONDITIONS)?)?;
        let u2008 = AgeBandTable::from_csv(&load(&t.unemployment_2008, EMBEDDED_UNEMPLOYMENT_2008)?)?;
        let u2021 = AgeBandTable::from_csv(&load(&t.unemployment_2021, EMBEDDED_UNEMPLOYMENT_2021)?)?;
        if labor_table.columns.len() < 2 {
            return Err(LifecycleError::Config("labor productivity table needs two education columns".into()));
        }

        let periods = params.periods();
        let retire = params.retirement_index();
        let mut survival = Vec::with_capacity(periods);
        for j in 0..periods {
            let age = params.age_of(j);
            let psi = if j + 1 == periods {
                0.0
            } else {
                survival_table
                    .value(0, age)
                    .ok_or_else(|| LifecycleError::Config(format!("survival table has no entry for age {age}")))?
            };
            if !(0.0..=1.0).contains(&psi) {
                return Err(LifecycleError::Config(format!("survival probability {psi} at age {age}")));
            }
            survival.push(psi);
        }
        let mut productivity = vec![[0.0; 2]; periods];
        for (j, h) in productivity.iter_mut().enumerate().take(retire) {
            let age = params.age_of(j);
            for (e, v) in h.iter_mut().enumerate() {
                *v = labor_table
                    .value(e, age)
                    .filter(|v| *v > 0.0)
                    .ok_or_else(|| LifecycleError::Config(format!("labor productivity missing or non-positive at age {age}")))?;
            }
        }
        let children = (0..periods)
            .map(|j| {
                let age = params.age_of(j) as f64;
                let mut p = [[[[0.0; CHILD_STATES]; CHILD_STATES]; 2]; 2];
                for (e, pe) in p.iter_mut().enumerate() {
                    for (m, pm) in pe.iter_mut().enumerate() {
                        for (k, pk) in pm.iter_mut().enumerate() {
                            *pk = child_transition(&child_coeffs, k, age, m == 1, e == 1);
                        }
                    }
                }
                p
            })
            .collect();
        let band = |table: &AgeBandTable| -> Vec<[f64; 2]> {
            (0..periods)
                .map(|j| {
                    if j < retire {
                        let age = params.age_of(j);
                        [table.value(age, false), table.value(age, true)]
                    } else {
                        [0.0; 2]
                    }
                })
                .collect()
        };
        let unemployment_2008 = band(&u2008);
        let unemployment_2021 = band(&u2021);
        if unemployment_2008.iter().chain(&unemployment_2021).flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(LifecycleError::Config("unemployment probabilities must lie in [0, 1]".into()));
        }

        let g = &params.grids;
        let eta = tauchen(params.rho, params.sigma_mu_sq.sqrt(), g.n_eta, g.eta_span)?;
        let nu = if g.n_nu == 1 {
            MarkovChain::iid(vec![0.0], vec![1.0])?
        } else {
            let iid = tauchen(0.0, spousal.residual_variance.sqrt(), g.n_nu, g.nu_span)?;
            MarkovChain::iid(iid.states, iid.stationary)?
        };
        let layout = Layout { n_eta: g.n_eta, n_nu: g.n_nu, n_a: g.n_assets };
        let mut model = Self {
            assets: asset_grid(g.n_assets, g.a_max, g.asset_curvature),
            initial: initial_distribution(&initial_table)?,
            params,
            layout,
            eta,
            nu,
            survival,
            productivity,
            children,
            unemployment_2008,
            unemployment_2021,
            spousal,
            base_income: Vec::new(),
        };
        model.rebuild_income()?;
        Ok(model)
    }

    /// Replaces `theta` and `a2`, refreshing the derived income table.
    pub fn set_fiscal(&mut self, theta: f64, a2: f64) -> Result<(), LifecycleError> {
        self.params.theta = theta;
        self.params.a2 = a2;
        self.params.validate()?;
        self.rebuild_income()
    }

    fn rebuild_income(&mut self) -> Result<(), LifecycleError> {
        let l = self.layout;
        let mut base = Vec::with_capacity(self.periods() * l.slices() * l.n_nu);
        for j in 0..self.periods() {
            for s in 0..l.slices() {
                let key = l.key(s);
                let head = self.head_income(j, key);
                for nu in 0..l.n_nu {
                    let spouse = if key.married { self.spouse_income(j, key, head, nu)? } else { 0.0 };
                    base.push(head + spouse);
                }
            }
        }
        self.base_income = base;
        Ok(())
    }

    pub fn periods(&self) -> usize {
        self.params.periods()
    }

    pub fn is_worker(&self, j: usize) -> bool {
        j < self.params.retirement_index()
    }

    /// Discount factor of a slice.
    pub fn delta(&self, key: SliceKey) -> f64 {
        if key.patient {
            self.params.delta_high
        } else {
            self.params.delta_low
        }
    }

    /// `P(delta | education)` for the slice's discount type.
    pub fn delta_probability(&self, key: SliceKey) -> f64 {
        let low = self.params.share_low_delta[key.education()];
        if key.patient {
            1.0 - low
        } else {
            low
        }
    }

    /// Deterministic labor efficiency `h(j, e)`; zero after retirement.
    pub fn productivity(&self, j: usize, college: bool) -> f64 {
        self.productivity[j][college as usize]
    }

    /// Head labor earnings while working, Social Security afterwards.
    pub fn head_income(&self, j: usize, key: SliceKey) -> f64 {
        if self.is_worker(j) {
            self.params.theta * self.productivity(j, key.college) * self.eta.states[key.eta].exp()
        } else {
            self.params.ss[key.education()]
        }
    }

    fn spouse_income(&self, j: usize, key: SliceKey, head: f64, nu: usize) -> Result<f64, LifecycleError> {
        let (mean, _) = spousal_income(
            &self.spousal,
            head,
            self.params.age_of(j) as f64,
            key.college,
            key.k,
            !self.is_worker(j),
        )?;
        Ok((mean + self.nu.states[nu]).exp())
    }

    /// Non-capital pre-tax income in the steady state.
    #[inline]
    pub fn base_income(&self, j: usize, slice: usize, nu: usize) -> f64 {
        self.base_income[(j * self.layout.slices() + slice) * self.layout.n_nu + nu]
    }

    /// Pre-tax income `y` with head and spousal earnings of workers scaled by
    /// `earnings_factor`.
    #[inline]
    pub fn income(&self, j: usize, slice: usize, nu: usize, a: f64, earnings_factor: f64) -> f64 {
        let base = self.base_income(j, slice, nu);
        let base = if self.is_worker(j) { base * earnings_factor } else { base };
        self.params.r * a + base
    }

    /// Cash on hand `a + y - T(y)`.
    #[inline]
    pub fn cash(&self, j: usize, slice: usize, nu: usize, a: f64, earnings_factor: f64) -> f64 {
        let y = self.income(j, slice, nu, a, earnings_factor);
        a + y - self.tax(y)
    }

    #[inline]
    pub fn tax(&self, y: f64) -> f64 {
        tax(y, self.params.a0, self.params.a1, self.params.a2)
    }

    /// `P(k' | j, e, m, k)`.
    pub fn child_transition(&self, j: usize, college: bool, married: bool, k: usize) -> &[f64; CHILD_STATES] {
        &self.children[j][college as usize][married as usize][k]
    }

    /// Crisis unemployment probability in 2008 by age and education.
    pub fn unemployment_2008(&self, j: usize, college: bool) -> f64 {
        self.unemployment_2008[j][college as usize]
    }

    /// Crisis unemployment probability in 2021, tilted toward low productivity.
    pub fn unemployment_2021(&self, j: usize, college: bool, eta: usize) -> f64 {
        let base = self.unemployment_2021[j][college as usize];
        if base == 0.0 {
            return 0.0;
        }
        let sd = self.eta.stationary_variance().sqrt();
        let z = if sd > 0.0 { self.eta.states[eta] / sd } else { 0.0 };
        (base * (-self.params.crisis2021.eta_tilt * z).exp()).clamp(0.0, 1.0)
    }

    /// Mass of entrants in each `(slice, nu)` cell at the first age.
    pub fn entry_weight(&self, slice: usize, nu: usize) -> f64 {
        let key = self.layout.key(slice);
        self.initial.get(key.college, key.married, key.k)
            * self.delta_probability(key)
            * self.eta.stationary[key.eta]
            * self.nu.stationary[nu]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trip() {
        let l = Layout { n_eta: 3, n_nu: 2, n_a: 4 };
        for s in 0..l.slices() {
            assert_eq!(l.slice(l.key(s)), s);
        }
        for i in 0..l.per_age() {
            let (s, nu, a) = l.split(i);
            assert_eq!(l.index(s, nu, a), i);
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = asset_grid(30, 40.0, 7.0);
        assert_eq!((g[0], g[29]), (0.0, 40.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[1] < 0.05);
    }

    #[test]
    fn default_model_builds() {
        let m = Model::new(ModelParams::default()).unwrap();
        assert_eq!(m.survival.len(), 83);
        assert_eq!(m.survival[82], 0.0);
        assert!(m.productivity(0, false) > 0.0 && m.productivity(47, true) == 0.0);
        let entry: f64 = (0..m.layout.slices())
            .flat_map(|s| (0..m.layout.n_nu).map(move |nu| (s, nu)))
            .map(|(s, nu)| m.entry_weight(s, nu))
            .sum();
        assert!((entry - 1.0).abs() < 1e-10);
        assert_eq!(m.unemployment_2008(60, false), 0.0);
        assert!(m.unemployment_2021(20, false, 0) > m.unemployment_2021(20, false, 6));
        let key = SliceKey { eta: 3, college: true, married: true, k: 2, patient: true };
        let s = m.layout.slice(key);
        assert!(m.base_income(10, s, 0) > m.head_income(10, key));
        // Retirees keep their benefits when earnings are scaled down.
        assert_eq!(m.income(60, s, 0, 0.0, 0.5), m.income(60, s, 0, 0.0, 1.0));
        assert!(m.income(30, s, 0, 0.0, 0.5) < m.income(30, s, 0, 0.0, 1.0));
    }
}
