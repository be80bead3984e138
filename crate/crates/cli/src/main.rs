//! `plateau`: DLA, g-purity, exact-variance, Monte Carlo and depth runs from
//! JSON experiment configs.
//!
//! Exit codes: 0 success, 1 config or runtime error, 2 DLA truncated at the
//! dimension cap, 3 outside the theory's hypotheses, 4 non-convergence.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use lie_plateau::setups::Setup;

use crate::config::{ExperimentConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "plateau", version, about = "Lie-algebraic loss-variance analysis of parameterized circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Qubit count; replaces n / n_range from the config.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Monte Carlo samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for the JSON report and CSV table.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use a benchmark setup (0-3) when no config file is given.
    #[arg(long, global = true)]
    setup: Option<u8>,
    /// Print the JSON report to stdout instead of the summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Lie closure and decomposition into center and simple ideals.
    Dla,
    /// g-purities of the state and observable per component.
    Purity,
    /// Exact mean and variance of the loss (and BP diagnosis over n_range).
    Variance,
    /// Monte Carlo estimate of the loss variance against the exact value.
    Montecarlo,
    /// lambda_max of the brickwork moment operator and depths per epsilon.
    Depth,
    /// Setups 0-3 over a range of n: exact vs Monte Carlo, with verdicts.
    ReproduceSi,
}

fn load(common: &Common, command: Command) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.setup {
        cfg.setup = Some(Setup::try_from(s).map_err(anyhow::Error::msg)?);
    }
    cfg.apply(&Overrides { n: common.n, samples: common.samples, seed: common.seed, out: common.out.clone() });
    if command == Command::ReproduceSi && cfg.n.is_none() && cfg.n_range.is_none() {
        cfg.n_range = Some(commands::DEFAULT_SI_RANGE);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<commands::Outcome> {
    let cfg = load(&cli.common, cli.command).map_err(|e| e.context("config error"))?;
    match cli.command {
        Command::Dla => commands::dla(&cfg),
        Command::Purity => commands::purity_cmd(&cfg),
        Command::Variance => commands::variance(&cfg),
        Command::Montecarlo => commands::montecarlo(&cfg),
        Command::Depth => commands::depth(&cfg),
        Command::ReproduceSi => commands::reproduce_si(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if cli.common.json {
                match serde_json::to_string_pretty(&outcome.report) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                for line in &outcome.summary {
                    println!("{line}");
                }
            }
            let code = outcome.report.status.exit_code();
            if code != 0 {
                eprintln!("status: {:?}", outcome.report.status);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::classify(&e).exit_code() as u8)
        }
    }
}
