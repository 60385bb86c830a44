use serde::{Deserialize, Serialize};

use super::bands::BandsConfig;
use super::ScenarioError;
use crate::alloc::AllocationMode;
use crate::inputs::GroupSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Rebates ranked by their effect on consumption in the Great Recession.
    #[default]
    Stimulus2008,
    /// Checks ranked by their effect on welfare in the pandemic.
    Welfare2021,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Stimulus2008 => "stimulus2008",
            Scenario::Welfare2021 => "welfare2021",
        }
    }
}

/// How per-household upper bounds are formed from the caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    /// `cap_adult * adults + cap_child * children`.
    #[default]
    Unconstrained,
    /// The enacted 2008 structure: the adult part is the tax liability,
    /// floored at $300 per adult and capped at `cap_adult` per adult.
    Replica,
}

/// Rows (1) to (7) of the cap-relaxation ladder: `(per adult, per child)` dollars.
pub const CAP_LADDER: [(f64, f64); 7] =
    [(600.0, 300.0), (900.0, 300.0), (1200.0, 300.0), (600.0, 600.0), (600.0, 900.0), (900.0, 600.0), (1200.0, 900.0)];

/// Grouping and transfer grids for building allocation inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsConfig {
    pub groups: GroupSpec,
    /// Dollars per increment.
    pub increment: f64,
    /// Grid length for the stimulus scenario.
    pub stimulus_levels: usize,
    /// Grid length for the welfare scenario.
    pub welfare_levels: usize,
    /// Clip increasing gains instead of failing.
    pub repair: bool,
    pub repair_tolerance: f64,
}

impl Default for InputsConfig {
    fn default() -> Self {
        Self {
            groups: GroupSpec::default(),
            increment: 100.0,
            stimulus_levels: 60,
            welfare_levels: 80,
            repair: true,
            repair_tolerance: 0.0,
        }
    }
}

impl InputsConfig {
    pub fn levels(&self, scenario: Scenario) -> usize {
        match scenario {
            Scenario::Stimulus2008 => self.stimulus_levels,
            Scenario::Welfare2021 => self.welfare_levels,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.increment > 0.0 && self.increment.is_finite()) {
            return Err(ScenarioError::Config("increment must be positive".into()));
        }
        if !(self.repair_tolerance >= 0.0) {
            return Err(ScenarioError::Config("repair tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// One allocation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Inequality aversion; 1 for the stimulus and -1 for the welfare run when unset.
    pub lambda: Option<f64>,
    /// Average dollars per household; the replica policy's cost when unset.
    pub budget: Option<f64>,
    /// Dollars per adult; $900 (2008) or $2,000 (2021) when unset.
    pub cap_adult: Option<f64>,
    /// Dollars per child; $600 (2008) or $2,000 (2021) when unset.
    pub cap_child: Option<f64>,
    pub eligibility: Eligibility,
    pub mode: AllocationMode,
    pub seed: u64,
    /// Budget step for the reported elasticity, in dollars per household.
    pub delta_budget: f64,
    pub bands: BandsConfig,
    /// Cap pairs for the REV table.
    pub rev_caps: Vec<(f64, f64)>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            lambda: None,
            budget: None,
            cap_adult: None,
            cap_child: None,
            eligibility: Eligibility::default(),
            mode: AllocationMode::Stop,
            seed: 0,
            delta_budget: 100.0,
            bands: BandsConfig::default(),
            rev_caps: CAP_LADDER.to_vec(),
        }
    }
}

impl ScenarioConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self { scenario, ..Self::default() }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(match self.scenario {
            Scenario::Stimulus2008 => 1.0,
            Scenario::Welfare2021 => -1.0,
        })
    }

    pub fn caps(&self) -> (f64, f64) {
        let (a, c) = match self.scenario {
            Scenario::Stimulus2008 => (900.0, 600.0),
            Scenario::Welfare2021 => (2000.0, 2000.0),
        };
        (self.cap_adult.unwrap_or(a), self.cap_child.unwrap_or(c))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let lambda = self.lambda();
        if !(lambda.is_finite() && lambda <= 1.0) {
            return Err(ScenarioError::Config(format!("lambda must be finite and at most 1, got {lambda}")));
        }
        let (a, c) = self.caps();
        if !(a > 0.0 && c > 0.0) {
            return Err(ScenarioError::Config("caps must be positive".into()));
        }
        if self.rev_caps.iter().any(|(a, c)| !(*a > 0.0 && *c > 0.0)) {
            return Err(ScenarioError::Config("REV table caps must be positive".into()));
        }
        if let Some(w) = self.budget {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(ScenarioError::Config(format!("budget must be non-negative, got {w}")));
            }
        }
        if !(self.delta_budget > 0.0) {
            return Err(ScenarioError::Config("delta_budget must be positive".into()));
        }
        self.bands.validate()
    }
}
