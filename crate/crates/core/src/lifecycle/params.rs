use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::LifecycleError;
use crate::calibration::tables::{named_values, EMBEDDED_EQUILIBRIUM_PARAMETERS, EMBEDDED_EXTERNAL_PARAMETERS};

/// Every parameter of the household model. Defaults reproduce the published
/// calibration where it is given and documented stand-ins elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub first_age: u32,
    pub last_age: u32,
    pub retirement_age: u32,
    pub gamma: f64,
    pub delta_low: f64,
    pub delta_high: f64,
    /// Share of low-discount households by education `[non-college, college]`.
    pub share_low_delta: [f64; 2],
    pub cohort_growth: f64,
    pub r: f64,
    pub theta: f64,
    pub rho: f64,
    pub sigma_mu_sq: f64,
    /// Social Security benefit by education.
    pub ss: [f64; 2],
    pub a0: f64,
    pub a1: f64,
    /// Starting value; replaced by the budget-balancing value when
    /// `equilibrium.enabled`.
    pub a2: f64,
    pub government_share: f64,
    pub grids: GridParams,
    pub equilibrium: EquilibriumParams,
    pub crisis2008: Crisis2008Params,
    pub crisis2021: Crisis2021Params,
    pub tables: TableOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub n_assets: usize,
    pub a_max: f64,
    /// Curvature of the exponential asset grid; larger values pack more points near zero.
    pub asset_curvature: f64,
    pub n_eta: usize,
    /// Head productivity grid half-width in unconditional standard deviations.
    pub eta_span: f64,
    pub n_nu: usize,
    pub nu_span: f64,
    /// Cash-on-hand nodes per state slice for the crisis policies.
    pub n_cash: usize,
    pub cash_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumParams {
    /// Recalibrate `theta` to the median-income target and balance the budget through `a2`.
    pub enabled: bool,
    pub median_income: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Crisis2008Params {
    /// Share of the year without work for the unemployed, `1 - xi`.
    pub unemployment_duration: f64,
    pub replacement: f64,
    pub dollars_per_unit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Crisis2021Params {
    pub unemployment_duration: f64,
    pub replacement: f64,
    pub kappa: f64,
    pub dollars_per_unit: f64,
    /// Unemployment risk is multiplied by `exp(-eta_tilt * z)` where `z` is the
    /// standardized productivity state, so low earners face more risk.
    pub eta_tilt: f64,
}

/// Optional replacements for the tables shipped in `data/`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableOverrides {
    pub survival: Option<PathBuf>,
    pub labor_productivity: Option<PathBuf>,
    pub child_transitions: Option<PathBuf>,
    pub spousal_income: Option<PathBuf>,
    pub initial_conditions: Option<PathBuf>,
    pub unemployment_2008: Option<PathBuf>,
    pub unemployment_2021: Option<PathBuf>,
}

impl Default for ModelParams {
    fn default() -> Self {
        let ext = named_values(EMBEDDED_EXTERNAL_PARAMETERS).expect("embedded parameter table");
        let eq = named_values(EMBEDDED_EQUILIBRIUM_PARAMETERS).expect("embedded parameter table");
        let x = |name: &str| ext.get(name).expect("embedded parameter");
        let q = |name: &str| eq.get(name).expect("embedded parameter");
        let first_age = 18;
        Self {
            first_age,
            last_age: first_age + x("J") as u32 - 1,
            retirement_age: first_age + x("j_R") as u32 - 1,
            gamma: x("gamma"),
            delta_low: x("delta_low"),
            delta_high: x("delta_high"),
            share_low_delta: [x("share_low_delta_noncollege"), x("share_low_delta_college")],
            cohort_growth: x("cohort_growth"),
            r: x("r"),
            theta: q("theta"),
            rho: x("rho"),
            sigma_mu_sq: x("sigma_mu_sq"),
            ss: [q("ss_noncollege"), q("ss_college")],
            a0: x("a0"),
            a1: x("a1"),
            a2: 1.0,
            government_share: q("government_share"),
            grids: GridParams::default(),
            equilibrium: EquilibriumParams::default(),
            crisis2008: Crisis2008Params {
                unemployment_duration: x("unemployment_duration_2008"),
                replacement: q("ui_replacement_2008"),
                dollars_per_unit: q("dollars_per_unit_2008"),
            },
            crisis2021: Crisis2021Params {
                unemployment_duration: x("unemployment_duration_2021"),
                replacement: q("ui_replacement_2021"),
                kappa: q("kappa_2021"),
                dollars_per_unit: q("dollars_per_unit_2021"),
                eta_tilt: 0.3,
            },
            tables: TableOverrides::default(),
        }
    }
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            n_assets: 30,
            a_max: 40.0,
            asset_curvature: 7.0,
            n_eta: 11,
            eta_span: 2.0,
            n_nu: 5,
            nu_span: 2.0,
            n_cash: 160,
            cash_curvature: 4.0,
        }
    }
}

impl Default for EquilibriumParams {
    fn default() -> Self {
        Self { enabled: true, median_income: 1.0, tolerance: 1e-3, max_iterations: 12 }
    }
}

impl Default for Crisis2008Params {
    fn default() -> Self {
        ModelParams::default().crisis2008
    }
}

impl Default for Crisis2021Params {
    fn default() -> Self {
        ModelParams::default().crisis2021
    }
}

impl ModelParams {
    /// Number of model periods.
    pub fn periods(&self) -> usize {
        (self.last_age - self.first_age + 1) as usize
    }

    /// Index of the first retired period.
    pub fn retirement_index(&self) -> usize {
        (self.retirement_age - self.first_age) as usize
    }

    pub fn age_of(&self, j: usize) -> u32 {
        self.first_age + j as u32
    }

    pub fn validate(&self) -> Result<(), LifecycleError> {
        let fail = |msg: String| Err(LifecycleError::Config(msg));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.gamma > 0.0) || self.gamma == 1.0 {
            return fail(format!("gamma must be positive and different from 1, got {}", self.gamma));
        }
        for d in [self.delta_low, self.delta_high] {
            if !(d > 0.0 && d <= 1.0) {
                return fail(format!("discount factors must lie in (0, 1], got {d}"));
            }
        }
        if !self.share_low_delta.iter().all(|s| unit(*s)) {
            return fail("low-discount shares must lie in [0, 1]".into());
        }
        if !(self.first_age < self.retirement_age && self.retirement_age <= self.last_age) {
            return fail("ages must satisfy first_age < retirement_age <= last_age".into());
        }
        if !(self.r > -1.0 && self.theta > 0.0 && self.sigma_mu_sq > 0.0 && self.rho.abs() < 1.0) {
            return fail("need r > -1, theta > 0, sigma_mu_sq > 0 and |rho| < 1".into());
        }
        if !(self.a0 > 0.0 && self.a0 < 1.0 && self.a1 > 0.0 && self.a2 >= 0.0) {
            return fail("tax parameters need 0 < a0 < 1, a1 > 0, a2 >= 0".into());
        }
        if self.ss.iter().any(|s| !(*s > 0.0)) || !(self.government_share >= 0.0) {
            return fail("Social Security must be positive and the government share non-negative".into());
        }
        let g = &self.grids;
        if g.n_assets < 4 || g.n_eta < 2 || g.n_nu < 1 || g.n_cash < 8 {
            return fail("grids need at least 4 asset, 2 productivity, 1 spousal and 8 cash points".into());
        }
        if !(g.a_max > 0.0 && g.asset_curvature > 0.0 && g.cash_curvature > 0.0 && g.eta_span > 0.0 && g.nu_span > 0.0) {
            return fail("grid extents must be positive".into());
        }
        let c8 = &self.crisis2008;
        let c21 = &self.crisis2021;
        for x in [c8.unemployment_duration, c8.replacement, c21.unemployment_duration, c21.replacement] {
            if !unit(x) {
                return fail(format!("unemployment durations and replacement rates must lie in [0, 1], got {x}"));
            }
        }
        if !(c21.kappa > 0.0 && c21.kappa <= 1.0) {
            return fail(format!("kappa must lie in (0, 1], got {}", c21.kappa));
        }
        if !(c8.dollars_per_unit > 0.0 && c21.dollars_per_unit > 0.0) {
            return fail("dollars per model unit must be positive".into());
        }
        let e = &self.equilibrium;
        if !(e.median_income > 0.0 && e.tolerance > 0.0) {
            return fail("equilibrium targets must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_values() {
        let p = ModelParams::default();
        assert_eq!(p.periods(), 83);
        assert_eq!(p.retirement_index(), 47);
        assert_eq!(p.retirement_age, 65);
        assert_eq!((p.gamma, p.r, p.rho, p.sigma_mu_sq), (2.0, 0.04, 0.98, 0.018));
        assert!((1.0 - p.crisis2008.unemployment_duration - 0.532).abs() < 1e-12);
        assert_eq!(p.crisis2021.kappa, 0.669);
        p.validate().unwrap();
    }

    #[test]
    fn log_utility_rejected() {
        let p = ModelParams { gamma: 1.0, ..ModelParams::default() };
        assert!(matches!(p.validate(), Err(LifecycleError::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let p = ModelParams::default();
        let text = toml::to_string(&p).unwrap();
        assert_eq!(toml::from_str::<ModelParams>(&text).unwrap(), p);
        let partial: ModelParams = toml::from_str("gamma = 3.0\n[grids]\nn_assets = 12\n").unwrap();
        assert_eq!((partial.gamma, partial.grids.n_assets, partial.grids.n_eta), (3.0, 12, 11));
    }
}
