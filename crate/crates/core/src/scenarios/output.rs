use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bands::Bands;
use super::run::{RevRow, ScenarioResult};
use super::ScenarioError;
use crate::inputs::GroupSummary;

fn csv_err(e: csv::Error) -> ScenarioError {
    ScenarioError::Io(std::io::Error::other(e))
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `group_id,m,k,income_lo,income_hi,D_star,dollars`.
pub fn write_allocations<W: Write>(result: &ScenarioResult, out: W) -> Result<(), ScenarioError> {
    write_rows(&result.rows, out)
}

/// `row,cap_adult,cap_child,budget_dollars,optimal_objective,replica_objective,REV`.
pub fn write_rev_table<W: Write>(rows: &[RevRow], out: W) -> Result<(), ScenarioError> {
    write_rows(rows, out)
}

#[derive(Serialize)]
struct BandRow {
    group_id: u32,
    m: Option<u8>,
    k: Option<usize>,
    income_lo: f64,
    income_hi: f64,
    benchmark: usize,
    lower: f64,
    upper: f64,
}

/// `group_id,m,k,income_lo,income_hi,benchmark,lower,upper`, in increments.
/// `groups` must be aligned with the bands.
pub fn write_bands<W: Write>(bands: &Bands, groups: &[GroupSummary], out: W) -> Result<(), ScenarioError> {
    if groups.len() != bands.group_ids.len() || groups.iter().zip(&bands.group_ids).any(|(g, &id)| g.group_id != id) {
        return Err(ScenarioError::Config("group summaries do not match the bands".into()));
    }
    let rows: Vec<BandRow> = (0..bands.group_ids.len())
        .map(|i| {
            let def = &groups[i];
            BandRow {
                group_id: def.group_id,
                m: def.m,
                k: def.k,
                income_lo: def.income_lo,
                income_hi: def.income_hi,
                benchmark: bands.benchmark[i],
                lower: bands.lower[i],
                upper: bands.upper[i],
            }
        })
        .collect();
    write_rows(&rows, out)
}

/// Headline numbers written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub lambda: f64,
    pub objective: f64,
    #[serde(rename = "REV")]
    pub rev: f64,
    pub gini: f64,
    pub elasticity: Option<f64>,
    pub delta_budget: f64,
    pub budget_dollars: f64,
    pub spent_dollars: f64,
    pub replica_cost_dollars: f64,
    pub replica_objective: f64,
    pub optimal_at_replica_cost: f64,
    pub repair_fraction: f64,
    pub violations: usize,
}

impl Summary {
    pub fn new(result: &ScenarioResult, delta_budget: f64) -> Self {
        Self {
            scenario: result.scenario.name().to_string(),
            lambda: result.lambda,
            objective: result.objective,
            rev: result.rev,
            gini: result.gini,
            elasticity: result.elasticity,
            delta_budget,
            budget_dollars: result.budget_dollars,
            spent_dollars: result.spent_dollars,
            replica_cost_dollars: result.replica_cost_dollars,
            replica_objective: result.replica_objective,
            optimal_at_replica_cost: result.optimal_at_replica_cost,
            repair_fraction: result.validation.repair_fraction(),
            violations: result.validation.violations.len(),
        }
    }
}
