//! `allocq`: solve the life-cycle model, build allocation inputs, and run
//! the allocation scenarios from a TOML configuration.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;

use allocq::alloc::AllocationMode;
use allocq::scenarios::Scenario;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use commands::Crisis;
use config::Config;
use error::CliError;
use manifest::Run;

#[derive(Debug, Parser)]
#[command(name = "allocq", version, about = "Optimal allocation queues for discrete transfers")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; all available cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cache directory, overriding `output.cache_dir`.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Only report warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    #[value(name = "stimulus2008")]
    Stimulus2008,
    #[value(name = "welfare2021")]
    Welfare2021,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Stimulus2008 => Scenario::Stimulus2008,
            ScenarioArg::Welfare2021 => Scenario::Welfare2021,
        }
    }
}

#[derive(Debug, Args)]
struct ScenarioFlag {
    /// Scenario, overriding `scenario.scenario`.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve and cache the steady state; optionally export policies and crisis regimes.
    Solve {
        /// Write the steady-state policy to `policy.csv`.
        #[arg(long)]
        export_policy: bool,
        /// Crisis regimes to solve and export.
        #[arg(long, value_enum)]
        crisis: Vec<Crisis>,
    },
    /// Build and cache the group-level input matrices.
    BuildInputs {
        /// Scenarios to build; the configured one when omitted.
        #[arg(long, value_enum)]
        scenario: Vec<ScenarioArg>,
        /// Build both scenarios.
        #[arg(long, conflicts_with = "scenario")]
        all: bool,
    },
    /// Allocate a budget along the optimal queue and compare with the replica policy.
    Allocate {
        #[command(flatten)]
        scenario: ScenarioFlag,
        /// Average dollars per household; the replica's cost when omitted.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Dollar caps as ADULT,CHILD.
        #[arg(long, value_parser = commands::parse_caps)]
        caps: Option<(f64, f64)>,
        /// `stop` or `skip`.
        #[arg(long, value_parser = commands::parse_mode)]
        mode: Option<AllocationMode>,
    },
    /// REV of the optimal allocation against the replica for each cap pair.
    RevTable {
        #[command(flatten)]
        scenario: ScenarioFlag,
    },
    /// Allocation bands under perturbed baselines.
    Bands {
        #[command(flatten)]
        scenario: ScenarioFlag,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time queue construction on a synthetic matrix.
    Bench {
        #[arg(long, default_value_t = 399_230)]
        groups: usize,
        #[arg(long, default_value_t = 168)]
        increments: usize,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the ranked queue of the configured scenario.
    ExportQueue {
        #[command(flatten)]
        scenario: ScenarioFlag,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::BuildInputs { .. } => "build-inputs",
            Command::Allocate { .. } => "allocate",
            Command::RevTable { .. } => "rev-table",
            Command::Bands { .. } => "bands",
            Command::Bench { .. } => "bench",
            Command::ExportQueue { .. } => "export-queue",
        }
    }
}

/// Folds command-line flags into the configuration.
fn apply_flags(cli: &Cli, mut config: Config) -> Result<Config, CliError> {
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(cache) = &cli.cache_dir {
        config.output.cache_dir = cache.clone();
    }
    let s = &mut config.scenario;
    let pick = |f: &ScenarioFlag, s: &mut allocq::scenarios::ScenarioConfig| {
        if let Some(sc) = f.scenario {
            s.scenario = sc.into();
        }
    };
    match &cli.command {
        Command::Allocate { scenario, budget, lambda, caps, mode } => {
            pick(scenario, s);
            s.budget = budget.or(s.budget);
            s.lambda = lambda.or(s.lambda);
            if let Some((a, c)) = caps {
                s.cap_adult = Some(*a);
                s.cap_child = Some(*c);
            }
            s.mode = mode.unwrap_or(s.mode);
        }
        Command::RevTable { scenario } => pick(scenario, s),
        Command::Bands { scenario, draws, sigma, seed } => {
            pick(scenario, s);
            s.bands.draws = draws.unwrap_or(s.bands.draws);
            s.bands.sigma = sigma.unwrap_or(s.bands.sigma);
            s.seed = seed.unwrap_or(s.seed);
        }
        Command::ExportQueue { scenario, lambda } => {
            pick(scenario, s);
            s.lambda = lambda.or(s.lambda);
        }
        Command::Solve { .. } | Command::BuildInputs { .. } | Command::Bench { .. } => {}
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        allocq::set_threads(n);
    }
    let config = Config::load(cli.config.as_deref(), std::env::vars())?;
    let config = apply_flags(cli, config)?;
    let seed = match &cli.command {
        Command::Bench { seed, .. } => *seed,
        _ => config.scenario.seed,
    };
    let mut run = Run::new(cli.command.name(), config.output.dir.clone(), config.hash(), seed);
    match &cli.command {
        Command::Solve { export_policy, crisis } => commands::solve(&mut run, &config, *export_policy, crisis)?,
        Command::BuildInputs { scenario, all } => {
            let list: Vec<Scenario> = if *all {
                vec![Scenario::Stimulus2008, Scenario::Welfare2021]
            } else if scenario.is_empty() {
                vec![config.scenario.scenario]
            } else {
                scenario.iter().map(|&s| s.into()).collect()
            };
            commands::build(&mut run, &config, &list)?;
        }
        Command::Allocate { .. } => commands::allocate(&mut run, &config)?,
        Command::RevTable { .. } => commands::rev(&mut run, &config)?,
        Command::Bands { .. } => commands::bands(&mut run, &config)?,
        Command::ExportQueue { .. } => commands::export_queue(&mut run, &config)?,
        Command::Bench { groups, increments, lambda, seed } => {
            let report = commands::bench(&mut run, *groups, *increments, *lambda, *seed)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("bench report serializes"));
        }
    }
    run.finish()?;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = execute(&cli) {
        error!("{e}");
        std::process::exit(e.exit_code());
    }
}
