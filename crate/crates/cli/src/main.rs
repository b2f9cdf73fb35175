//! Command-line front end: strategy sweeps, the (ψ, ω) factor table, and
//! the invariant suite.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when an
//! invariant check fails.

mod output;
mod scenario;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::FactorRecord;
use phyauth_core::montecarlo::{run_trials, SplitSpec, TrialOptions, TrialPlan};
use phyauth_core::powerctl::{allocate_from_factors, strategy_splits, PowerError};
use phyauth_core::validation::run_invariant_suite;
use scenario::Scenario;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phyauth",
    version,
    about = "Fingerprint PHY-authentication link simulator for a multi-user mmWave downlink with artificial noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep power-allocation strategies over the phi and P_Tx grids
    Sweep(SweepArgs),
    /// Tabulate the (psi, omega) -> (phi, P_t) allocation relation
    Factors(FactorsArgs),
    /// Run the structural invariant suite and report pass/fail per check
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (key = value sections; defaults when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the number of Monte Carlo trials per point
    #[arg(long)]
    trials: Option<u32>,
    /// Override the number of channel realizations
    #[arg(long)]
    realizations: Option<u32>,
    /// Closed forms only; skip the waveform-level trials
    #[arg(long)]
    analytic_only: bool,
    /// Run the eavesdropper ML key attack in every trial
    #[arg(long)]
    ml_attack: bool,
    /// Worker thread count (defaults to the rayon global pool)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct FactorsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated psi values (overrides the scenario list)
    #[arg(long)]
    psi: Option<String>,
    /// Comma-separated omega values (overrides the scenario list)
    #[arg(long)]
    omega: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file to validate
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the sampled realizations
    #[arg(long)]
    seed: Option<u64>,
    /// Number of realizations per invariant
    #[arg(long, default_value_t = 5)]
    realizations: u32,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Factors(args) => cmd_factors(args),
        Command::Validate(args) => return cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario, ConfigError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            Ok(Scenario::parse(&text)?)
        }
        None => Ok(Scenario::default()),
    }
}

fn emit(common: &CommonArgs, body: Vec<u8>) -> Result<(), ConfigError> {
    match &common.out {
        Some(path) => fs::write(path, body)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&body).map_err(ConfigError::from)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), ConfigError> {
    let scenario = load_scenario(&args.common.config)?;
    let sweep = &scenario.sweep;
    let seed = args.common.seed.unwrap_or(sweep.seed);

    // expand every strategy over the phi grid; infeasible points keep a row
    let mut splits = Vec::new();
    for strategy in &sweep.strategies {
        for (phi, outcome) in strategy_splits(*strategy, &sweep.phi_grid, 1.0) {
            let tag_fraction = match &outcome {
                Ok(split) => split.tag_fraction,
                // carried through so the record shows the violated point
                Err(PowerError::TagFractionTooLarge { p_t }) => *p_t,
                Err(_) => f64::NAN,
            };
            splits.push(SplitSpec {
                strategy: strategy.label(),
                phi,
                tag_fraction,
            });
        }
    }

    let plan = TrialPlan {
        cfg: scenario.cfg.clone(),
        splits,
        p_tx_dbm: sweep.p_tx_dbm.clone(),
        n_realizations: args.realizations.unwrap_or(sweep.realizations),
        n_trials: args.trials.unwrap_or(sweep.trials),
        base_seed: seed,
        options: TrialOptions {
            analytic_only: args.analytic_only || sweep.analytic_only,
            with_ml_attack: args.ml_attack || sweep.ml_attack,
            mc_key_space: sweep.mc_key_space,
            beta_override: sweep.rzf_beta,
        },
    };

    let records = match args.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(ConfigError::from)?
            .install(|| run_trials(&plan)),
        None => run_trials(&plan),
    }
    .map_err(ConfigError::from)?;

    let mut body = Vec::new();
    match args.common.format {
        Format::Csv => output::write_sweep_csv(&records, &mut body)?,
        Format::Jsonl => output::write_sweep_jsonl(&records, &mut body)?,
    }
    emit(&args.common, body)
}

fn cmd_factors(args: FactorsArgs) -> Result<(), ConfigError> {
    let scenario = load_scenario(&args.common.config)?;
    let psi_list = match &args.psi {
        Some(s) => parse_float_list(s)?,
        None => scenario.factors.psi.clone(),
    };
    let omega_grid = match &args.omega {
        Some(s) => parse_float_list(s)?,
        None => scenario.factors.omega.clone(),
    };
    if psi_list.is_empty() || omega_grid.is_empty() {
        return Err(ConfigError("psi and omega lists must be non-empty".into()));
    }
    let mut records = Vec::new();
    for &psi in &psi_list {
        for &omega in &omega_grid {
            let record = match allocate_from_factors(psi, omega) {
                Ok((phi, p_t)) => FactorRecord {
                    psi,
                    omega,
                    phi: Some(phi),
                    tag_fraction: Some(p_t),
                    note: None,
                },
                Err(e) => FactorRecord {
                    psi,
                    omega,
                    phi: None,
                    tag_fraction: None,
                    note: Some(e.to_string()),
                },
            };
            records.push(record);
        }
    }
    let mut body = Vec::new();
    match args.common.format {
        Format::Csv => output::write_factors_csv(&records, &mut body)?,
        Format::Jsonl => output::write_factors_jsonl(&records, &mut body)?,
    }
    emit(&args.common, body)
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let scenario = match load_scenario(&args.config) {
        Ok(s) => s,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let seed = args.seed.unwrap_or(scenario.sweep.seed);
    let checks = run_invariant_suite(&scenario.cfg, seed, args.realizations);
    let mut all_passed = true;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", c.name, c.detail);
        all_passed &= c.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn parse_float_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|e| ConfigError(format!("bad number \"{item}\": {e}")))
        })
        .collect()
}
