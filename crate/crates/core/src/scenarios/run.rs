use log::info;
use serde::{Deserialize, Serialize};

use super::bands::{perturbation_bands, Bands};
use super::config::{Eligibility, InputsConfig, Scenario, ScenarioConfig};
use super::policy::{replica_dollars, upper_dollars, Household};
use super::ScenarioError;
use crate::alloc::{
    allocate, build_queue, ces_objective, elasticity, gini, rev, AllocationMode, AllocationQueue, GroupId,
    IncrementMatrix, ValidationReport,
};
use crate::inputs::{
    consumption_increments, define_groups, finalize_matrix, group_conditionals, levels_to_matrix, transfer_grid,
    welfare_increments, BetaRule, GroupSummary,
};
use crate::lifecycle::{Crisis2008, Crisis2021, Equilibrium};

/// Group-level inputs of one scenario on its full transfer grid.
#[derive(Debug, Clone)]
pub struct ScenarioInputs {
    pub scenario: Scenario,
    /// Dollars per increment.
    pub increment: f64,
    /// Aligned with the matrix's groups.
    pub groups: Vec<GroupSummary>,
    /// Validated (and, if enabled, repaired) matrix without caps.
    pub matrix: IncrementMatrix,
    pub report: ValidationReport,
}

/// Solves the scenario's crisis regime and aggregates it into group inputs.
pub fn build_inputs(eq: &Equilibrium, config: &InputsConfig, scenario: Scenario) -> Result<ScenarioInputs, ScenarioError> {
    config.validate()?;
    let model = &eq.model;
    let last_age = model.params.age_of(model.periods() - 1);
    let groups = define_groups(&config.groups, model.params.first_age, last_age)?;
    let grid = transfer_grid(config.increment, config.levels(scenario));
    let top = grid.last().copied().unwrap_or(0.0);
    let (conditionals, levels, beta) = match scenario {
        Scenario::Stimulus2008 => {
            let dpu = model.params.crisis2008.dollars_per_unit;
            let crisis = Crisis2008::solve(model, &eq.steady, top / dpu)?;
            let cond = group_conditionals(model, &eq.steady, &eq.distribution, &groups, dpu)?;
            let levels = consumption_increments(model, &crisis, &cond, &grid)?;
            (cond, levels, BetaRule::Unit)
        }
        Scenario::Welfare2021 => {
            let dpu = model.params.crisis2021.dollars_per_unit;
            let crisis = Crisis2021::solve(model, &eq.steady, top / dpu)?;
            let cond = group_conditionals(model, &eq.steady, &eq.distribution, &groups, dpu)?;
            let levels = welfare_increments(model, &crisis, &cond, &grid)?;
            (cond, levels, BetaRule::HouseholdSize)
        }
    };
    let raw = levels_to_matrix(&levels, &conditionals, beta)?;
    let (matrix, report) = finalize_matrix(raw, config.repair, config.repair_tolerance)?;
    info!(
        "{}: {} groups, {} violations, repair fraction {:.3e}",
        scenario.name(),
        matrix.len(),
        report.violations.len(),
        report.repair_fraction()
    );
    let groups = matrix.groups().iter().map(|g| conditionals.summary(g.id as usize)).collect();
    Ok(ScenarioInputs { scenario, increment: config.increment, groups, matrix, report })
}

impl ScenarioInputs {
    /// Reassembles inputs from a persisted matrix and its group summaries.
    pub fn from_parts(
        scenario: Scenario,
        increment: f64,
        groups: Vec<GroupSummary>,
        matrix: IncrementMatrix,
        report: ValidationReport,
    ) -> Result<Self, ScenarioError> {
        if !(increment > 0.0) {
            return Err(ScenarioError::Config(format!("increment must be positive, got {increment}")));
        }
        let aligned = groups.len() == matrix.len() && groups.iter().zip(matrix.groups()).all(|(s, g)| s.group_id == g.id);
        if !aligned {
            return Err(ScenarioError::Config("group summaries do not match the matrix".into()));
        }
        Ok(Self { scenario, increment, groups, matrix, report })
    }
}

/// One line of `allocations.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub group_id: GroupId,
    pub m: u8,
    pub k: usize,
    pub income_lo: f64,
    pub income_hi: f64,
    #[serde(rename = "D_star")]
    pub d_star: usize,
    pub dollars: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub lambda: f64,
    pub mode: AllocationMode,
    pub cap_adult: f64,
    pub cap_child: f64,
    pub eligibility: Eligibility,
    /// Average dollars per household available and spent.
    pub budget_dollars: f64,
    pub spent_dollars: f64,
    pub objective: f64,
    pub replica_cost_dollars: f64,
    pub replica_objective: f64,
    /// Optimal objective when spending exactly the replica's budget.
    pub optimal_at_replica_cost: f64,
    pub rev: f64,
    /// Gini of group outcomes under the optimal allocation.
    pub gini: f64,
    /// `None` when the budget is zero.
    pub elasticity: Option<f64>,
    pub validation: ValidationReport,
    /// Aligned with the matrix's groups.
    pub counts: Vec<usize>,
    pub replica_counts: Vec<usize>,
    pub rows: Vec<AllocationRow>,
}

/// One line of `rev_table.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevRow {
    pub row: usize,
    pub cap_adult: f64,
    pub cap_child: f64,
    pub budget_dollars: f64,
    pub optimal_objective: f64,
    pub replica_objective: f64,
    #[serde(rename = "REV")]
    pub rev: f64,
}

fn households(inputs: &ScenarioInputs) -> Result<Vec<Household>, ScenarioError> {
    inputs
        .groups
        .iter()
        .map(|g| {
            Household::of(&g.definition(), g.mean_income, g.mean_tax).ok_or_else(|| {
                ScenarioError::Config("scenarios need groups split by marital status and children".into())
            })
        })
        .collect()
}

fn to_increments(dollars: f64, step: f64) -> usize {
    (dollars / step + 1e-9).floor() as usize
}

/// Replica allocation in increments, rounded to the nearest increment and
/// limited to the transfer grid.
fn replica_counts(inputs: &ScenarioInputs, hh: &[Household]) -> Vec<usize> {
    hh.iter()
        .zip(inputs.matrix.groups())
        .map(|(h, g)| ((replica_dollars(inputs.scenario, h) / inputs.increment).round() as usize).min(g.upper_bound()))
        .collect()
}

/// The input matrix truncated to the caps, checked against the replica.
fn capped(
    inputs: &ScenarioInputs,
    hh: &[Household],
    replica: &[usize],
    caps: (f64, f64),
    eligibility: Eligibility,
) -> Result<IncrementMatrix, ScenarioError> {
    let bounds: Vec<usize> = hh
        .iter()
        .zip(inputs.matrix.groups())
        .map(|(h, g)| to_increments(upper_dollars(h, caps.0, caps.1, eligibility), inputs.increment).min(g.upper_bound()))
        .collect();
    if let Some(i) = (0..bounds.len()).find(|&i| replica[i] > bounds[i]) {
        return Err(ScenarioError::Infeasible(format!(
            "the replica policy gives group {} more than the caps ({} > {} increments)",
            inputs.matrix.groups()[i].id,
            replica[i],
            bounds[i]
        )));
    }
    let mut i = 0;
    Ok(inputs.matrix.map_groups(|g| {
        let mut g = g.clone();
        g.alphas.truncate(bounds[i]);
        i += 1;
        g
    })?)
}

fn outcomes(matrix: &IncrementMatrix, counts: &[usize]) -> Vec<f64> {
    matrix.groups().iter().zip(counts).map(|(g, &d)| g.level(d)).collect()
}

fn optimum(queue: &AllocationQueue, matrix: &IncrementMatrix, budget: f64, mode: AllocationMode) -> Result<f64, ScenarioError> {
    Ok(allocate(queue, matrix, budget, mode)?.objective)
}

fn check_scenario(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<(), ScenarioError> {
    config.validate()?;
    if config.scenario != inputs.scenario {
        return Err(ScenarioError::Config(format!(
            "inputs were built for {} but the run asks for {}",
            inputs.scenario.name(),
            config.scenario.name()
        )));
    }
    Ok(())
}

/// The input matrix truncated to the configured caps, the replica
/// allocation in increments, and the budget in increments (the replica's
/// cost when the configuration leaves it unset).
pub fn scenario_matrix(
    inputs: &ScenarioInputs,
    config: &ScenarioConfig,
) -> Result<(IncrementMatrix, Vec<usize>, f64), ScenarioError> {
    check_scenario(inputs, config)?;
    let hh = households(inputs)?;
    let replica = replica_counts(inputs, &hh);
    let matrix = capped(inputs, &hh, &replica, config.caps(), config.eligibility)?;
    let budget = config.budget.map_or_else(|| matrix.allocation_cost(&replica), |w| w / inputs.increment);
    Ok((matrix, replica, budget))
}

/// Perturbation bands around the scenario's optimal allocation, seeded by
/// the configuration.
pub fn scenario_bands(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<Bands, ScenarioError> {
    let (matrix, _, budget) = scenario_matrix(inputs, config)?;
    perturbation_bands(&matrix, config.lambda(), budget, config.mode, &config.bands, config.seed)
}

/// Allocates the configured budget optimally under the caps and compares
/// the result with the replica of the enacted policy.
pub fn run_scenario(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<ScenarioResult, ScenarioError> {
    let step = inputs.increment;
    let lambda = config.lambda();
    let caps = config.caps();
    let (matrix, replica, budget) = scenario_matrix(inputs, config)?;
    let queue = build_queue(&matrix, lambda)?;
    let replica_cost = matrix.allocation_cost(&replica);
    let result = allocate(&queue, &matrix, budget, config.mode)?;
    let replica_objective = ces_objective(&matrix, &replica, lambda)?;
    let optimal_at_replica_cost = optimum(&queue, &matrix, replica_cost, config.mode)?;
    let rev = rev(&queue, &matrix, &replica)?;
    let gini = gini(&outcomes(&matrix, &result.counts))?;
    let elasticity = if budget > 0.0 { Some(elasticity(&queue, &matrix, budget, config.delta_budget / step)?) } else { None };
    let rows = inputs
        .groups
        .iter()
        .zip(&result.counts)
        .map(|(def, &d)| {
            AllocationRow {
                group_id: def.group_id,
                m: def.m.unwrap_or(0),
                k: def.k.unwrap_or(0),
                income_lo: def.income_lo,
                income_hi: def.income_hi,
                d_star: d,
                dollars: d as f64 * step,
            }
        })
        .collect();
    Ok(ScenarioResult {
        scenario: config.scenario,
        lambda,
        mode: config.mode,
        cap_adult: caps.0,
        cap_child: caps.1,
        eligibility: config.eligibility,
        budget_dollars: budget * step,
        spent_dollars: result.budget_used * step,
        objective: result.objective,
        replica_cost_dollars: replica_cost * step,
        replica_objective,
        optimal_at_replica_cost,
        rev,
        gini,
        elasticity,
        validation: inputs.report.clone(),
        counts: result.counts,
        replica_counts: replica,
        rows,
    })
}

/// REV of the optimal allocation against the replica at the replica's
/// budget, for each cap pair in the configuration.
pub fn rev_table(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<Vec<RevRow>, ScenarioError> {
    config.validate()?;
    let lambda = config.lambda();
    let hh = households(inputs)?;
    let replica = replica_counts(inputs, &hh);
    config
        .rev_caps
        .iter()
        .enumerate()
        .map(|(i, &caps)| {
            let matrix = capped(inputs, &hh, &replica, caps, config.eligibility)?;
            let queue = build_queue(&matrix, lambda)?;
            let cost = matrix.allocation_cost(&replica);
            Ok(RevRow {
                row: i + 1,
                cap_adult: caps.0,
                cap_child: caps.1,
                budget_dollars: cost * inputs.increment,
                optimal_objective: optimum(&queue, &matrix, cost, config.mode)?,
                replica_objective: ces_objective(&matrix, &replica, lambda)?,
                rev: rev(&queue, &matrix, &replica)?,
            })
        })
        .collect()
}
