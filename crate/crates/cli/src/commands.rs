use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use allocq::alloc::io::{read_matrix, write_matrix, write_queue};
use allocq::alloc::{build_queue, synthetic, AllocationMode, ValidationReport};
use allocq::inputs::{mpc_apc_table, read_group_summaries, write_group_summaries, write_mpc_table};
use allocq::lifecycle::export::{write_cash_policy, write_policy};
use allocq::lifecycle::{
    has_equilibrium, load_equilibrium, save_equilibrium, solve_equilibrium, Crisis2008, Crisis2021, Equilibrium,
    StateSummary,
};
use allocq::scenarios::{
    build_inputs, rev_table, run_scenario, scenario_bands, scenario_matrix, write_allocations, write_bands,
    write_rev_table, Scenario, ScenarioInputs, Summary,
};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{peak_rss_bytes, Run};

const KEY_LEN: usize = 16;

fn equilibrium_dir(config: &Config) -> PathBuf {
    config.output.cache_dir.join(format!("equilibrium-{}", &config.model_hash()[..KEY_LEN]))
}

fn inputs_dir(config: &Config, scenario: Scenario) -> PathBuf {
    config.output.cache_dir.join(format!("inputs-{}-{}", scenario.name(), &config.inputs_hash(scenario)[..KEY_LEN]))
}

/// Loads the cached equilibrium for the model section, solving and caching it when absent.
fn equilibrium(run: &mut Run, config: &Config) -> Result<Equilibrium, CliError> {
    let dir = equilibrium_dir(config);
    if has_equilibrium(&dir) {
        let eq = run.stage("load_equilibrium", |_| Ok(load_equilibrium(&dir)?))?;
        run.mark_cache(true);
        info!("equilibrium loaded from {}", dir.display());
        return Ok(eq);
    }
    let eq = run.stage("solve_equilibrium", |_| Ok(solve_equilibrium(config.model.clone())?))?;
    run.mark_cache(false);
    let files = save_equilibrium(&eq, &dir)?;
    run.record_cache_files(files);
    info!("equilibrium cached in {}", dir.display());
    Ok(eq)
}

#[derive(Serialize)]
struct EquilibriumReport {
    theta: f64,
    a2: f64,
    iterations: usize,
    converged: bool,
    budget_gap: f64,
    grid_escapes: usize,
    summary: StateSummary,
}

/// Crisis regimes `solve` can export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Crisis {
    #[value(name = "2008")]
    Y2008,
    #[value(name = "2021")]
    Y2021,
}

pub fn solve(run: &mut Run, config: &Config, export_policy: bool, crises: &[Crisis]) -> Result<(), CliError> {
    let eq = equilibrium(run, config)?;
    let model = &eq.model;
    run.write_json(
        "equilibrium.json",
        &EquilibriumReport {
            theta: model.params.theta,
            a2: model.params.a2,
            iterations: eq.iterations,
            converged: eq.converged,
            budget_gap: eq.budget_gap(),
            grid_escapes: eq.steady.grid_escapes,
            summary: eq.summary,
        },
    )?;
    if export_policy {
        run.stage("export_policy", |run| Ok(write_policy(model, &eq.steady, run.create("policy.csv")?)?))?;
    }
    for &crisis in crises {
        let (scenario, name) = match crisis {
            Crisis::Y2008 => (Scenario::Stimulus2008, "cash_policy_2008.csv"),
            Crisis::Y2021 => (Scenario::Welfare2021, "cash_policy_2021.csv"),
        };
        let top = config.inputs.increment * config.inputs.levels(scenario) as f64;
        run.stage(&format!("solve_crisis_{}", scenario.name()), |run| {
            match crisis {
                Crisis::Y2008 => {
                    let c = Crisis2008::solve(model, &eq.steady, top / model.params.crisis2008.dollars_per_unit)?;
                    write_cash_policy(model, &c.rebate, run.create(name)?)?;
                }
                Crisis::Y2021 => {
                    let c = Crisis2021::solve(model, &eq.steady, top / model.params.crisis2021.dollars_per_unit)?;
                    write_cash_policy(model, &c.pandemic, run.create(name)?)?;
                }
            }
            Ok(())
        })?;
    }
    if !eq.converged {
        return Err(CliError::Validation("the equilibrium iteration did not converge".into()));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct InputsMeta {
    scenario: Scenario,
    increment: f64,
    report: ValidationReport,
}

const MATRIX: &str = "matrix.csv";
const GROUPS: &str = "groups.csv";
const META: &str = "inputs.json";

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Other(format!("malformed cache entry: {e}"))
}

fn save_inputs(inputs: &ScenarioInputs, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let paths = [dir.join(MATRIX), dir.join(GROUPS), dir.join(META)];
    write_matrix(&inputs.matrix, std::io::BufWriter::new(fs::File::create(&paths[0])?))?;
    write_group_summaries(&inputs.groups, std::io::BufWriter::new(fs::File::create(&paths[1])?))?;
    let meta = InputsMeta { scenario: inputs.scenario, increment: inputs.increment, report: inputs.report.clone() };
    fs::write(&paths[2], serde_json::to_vec_pretty(&meta).map_err(json_err)?)?;
    Ok(paths.to_vec())
}

/// Reads the cached inputs of `scenario`, failing with directions when they were never built.
fn load_inputs(run: &mut Run, config: &Config, scenario: Scenario) -> Result<ScenarioInputs, CliError> {
    let dir = inputs_dir(config, scenario);
    if !dir.join(META).is_file() {
        return Err(CliError::Other(format!(
            "no {} input matrix for this configuration in {}; run `allocq solve` and then `allocq build-inputs --scenario {}` first",
            scenario.name(),
            config.output.cache_dir.display(),
            scenario.name()
        )));
    }
    run.stage("load_inputs", |_| {
        let meta: InputsMeta = serde_json::from_slice(&fs::read(dir.join(META))?).map_err(json_err)?;
        let matrix = read_matrix(std::io::BufReader::new(fs::File::open(dir.join(MATRIX))?))?;
        let groups = read_group_summaries(std::io::BufReader::new(fs::File::open(dir.join(GROUPS))?))?;
        Ok(ScenarioInputs::from_parts(meta.scenario, meta.increment, groups, matrix, meta.report)?)
    })
}

pub fn build(run: &mut Run, config: &Config, scenarios: &[Scenario]) -> Result<(), CliError> {
    let mut eq: Option<Equilibrium> = None;
    for &scenario in scenarios {
        let dir = inputs_dir(config, scenario);
        let inputs = if dir.join(META).is_file() {
            let inputs = load_inputs(run, config, scenario)?;
            run.mark_cache(true);
            inputs
        } else {
            if eq.is_none() {
                eq = Some(equilibrium(run, config)?);
            }
            let eq = eq.as_ref().expect("equilibrium is set");
            let inputs = run.stage(&format!("build_inputs_{}", scenario.name()), |_| {
                Ok(build_inputs(eq, &config.inputs, scenario)?)
            })?;
            run.mark_cache(false);
            let files = save_inputs(&inputs, &dir)?;
            run.record_cache_files(files);
            inputs
        };
        let name = scenario.name();
        write_matrix(&inputs.matrix, run.create(&format!("matrix_{name}.csv"))?)?;
        write_group_summaries(&inputs.groups, run.create(&format!("groups_{name}.csv"))?)?;
        run.write_json(&format!("validation_{name}.json"), &inputs.report)?;
        if scenario == Scenario::Stimulus2008 {
            let rows = mpc_apc_table(&inputs.matrix, &inputs.groups, inputs.increment)?;
            write_mpc_table(&rows, run.create("mpc_apc.csv")?)?;
        }
        info!(
            "{name}: {} groups, {} violations, repair fraction {:.3e}",
            inputs.matrix.len(),
            inputs.report.violations.len(),
            inputs.report.repair_fraction()
        );
    }
    Ok(())
}

pub fn allocate(run: &mut Run, config: &Config) -> Result<(), CliError> {
    let inputs = load_inputs(run, config, config.scenario.scenario)?;
    let result = run.stage("allocate", |_| Ok(run_scenario(&inputs, &config.scenario)?))?;
    info!(
        "{} at lambda {}: objective {:.6}, replica {:.6}, REV {:.4}, Gini {:.4}, spent ${:.2} of ${:.2}",
        result.scenario.name(),
        result.lambda,
        result.objective,
        result.replica_objective,
        result.rev,
        result.gini,
        result.spent_dollars,
        result.budget_dollars
    );
    write_allocations(&result, run.create("allocations.csv")?)?;
    run.write_json("summary.json", &Summary::new(&result, config.scenario.delta_budget))?;
    Ok(())
}

pub fn rev(run: &mut Run, config: &Config) -> Result<(), CliError> {
    let inputs = load_inputs(run, config, config.scenario.scenario)?;
    let rows = run.stage("rev_table", |_| Ok(rev_table(&inputs, &config.scenario)?))?;
    for r in &rows {
        info!("row {} (${}/${}): REV {:.4}", r.row, r.cap_adult, r.cap_child, r.rev);
    }
    write_rev_table(&rows, run.create("rev_table.csv")?)?;
    Ok(())
}

pub fn bands(run: &mut Run, config: &Config) -> Result<(), CliError> {
    let inputs = load_inputs(run, config, config.scenario.scenario)?;
    let bands = run.stage("bands", |_| Ok(scenario_bands(&inputs, &config.scenario)?))?;
    info!(
        "{} draws, {} redraws, {} repaired, {:.1}% of groups outside their band",
        bands.draws,
        bands.redraws,
        bands.repaired,
        100.0 * bands.outside_share
    );
    write_bands(&bands, &inputs.groups, run.create("bands.csv")?)?;
    Ok(())
}

pub fn export_queue(run: &mut Run, config: &Config) -> Result<(), CliError> {
    let inputs = load_inputs(run, config, config.scenario.scenario)?;
    let (matrix, _, _) = scenario_matrix(&inputs, &config.scenario)?;
    let queue = run.stage("build_queue", |_| Ok(build_queue(&matrix, config.scenario.lambda())?))?;
    write_queue(&queue, &matrix, run.create("queue.csv")?)?;
    Ok(())
}

/// Timing report of `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub groups: usize,
    pub increments: usize,
    pub keys: usize,
    pub lambda: f64,
    pub seed: u64,
    pub threads: usize,
    pub generate_seconds: f64,
    pub queue_seconds: f64,
    pub peak_rss_bytes: Option<u64>,
}

pub fn bench(run: &mut Run, groups: usize, increments: usize, lambda: f64, seed: u64) -> Result<BenchReport, CliError> {
    let start = Instant::now();
    let matrix = run.stage("generate", |_| Ok(synthetic::bench_matrix(groups, increments, seed)))?;
    let generate_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let queue = run.stage("build_queue", |_| Ok(build_queue(&matrix, lambda)?))?;
    let queue_seconds = start.elapsed().as_secs_f64();
    let report = BenchReport {
        groups,
        increments,
        keys: queue.len(),
        lambda,
        seed,
        threads: allocq::current_threads(),
        generate_seconds,
        queue_seconds,
        peak_rss_bytes: peak_rss_bytes(),
    };
    run.write_json("bench.json", &report)?;
    Ok(report)
}

/// Parses `ADULT,CHILD` dollar caps.
pub fn parse_caps(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, c] => Ok((a.parse().map_err(|e| format!("adult cap: {e}"))?, c.parse().map_err(|e| format!("child cap: {e}"))?)),
        _ => Err(format!("expected ADULT,CHILD, got {s:?}")),
    }
}

/// Parses `stop` or `skip`.
pub fn parse_mode(s: &str) -> Result<AllocationMode, String> {
    match s {
        "stop" => Ok(AllocationMode::Stop),
        "skip" => Ok(AllocationMode::Skip),
        _ => Err(format!("expected stop or skip, got {s:?}")),
    }
}
