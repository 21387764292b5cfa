use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod fail;
mod output;
mod verify;

use config::RunConfig;
use output::Sink;

#[derive(Debug, Parser)]
#[command(
    name = "tiergrade",
    version,
    about = "Grading rules, school tiers and student effort"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV tables; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cross-check against brute force where available.
    #[arg(long, global = true)]
    oracle: bool,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Equilibrium effort per mean type and rule.
    Effort,
    /// Mean type where tough and lenient grading tie.
    ThetaDagger,
    /// Welfare-optimal sorting and grading of a finite population.
    Design,
    /// Best system implementable with fees over a type distribution.
    DesignConstrained,
    /// Incentive compatibility of a school system without transfers.
    IcCheck,
    /// Fees implementing a tiered system.
    Fees,
    /// Monte Carlo labour market for a school system.
    Simulate,
    /// Three-value effort curves.
    Multivalue,
    /// Quick invariant suite.
    Verify,
}

pub struct Run {
    pub cfg: RunConfig,
    pub oracle: bool,
    pub seed: Option<u64>,
}

fn run(cli: Cli) -> fail::Outcome<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let run = Run {
        cfg,
        oracle: cli.oracle,
        seed: cli.seed,
    };
    let mut sink = Sink::new(cli.out)?;
    match cli.command {
        Command::Effort => commands::effort(&run, &mut sink),
        Command::ThetaDagger => commands::theta_dagger(&run, &mut sink),
        Command::Design => commands::design(&run, &mut sink),
        Command::DesignConstrained => commands::design_constrained(&run, &mut sink),
        Command::IcCheck => commands::ic_check(&run, &mut sink),
        Command::Fees => commands::fees(&run, &mut sink),
        Command::Simulate => commands::simulate(&run, &mut sink),
        Command::Multivalue => commands::multivalue(&run, &mut sink),
        Command::Verify => verify::run(&run, &mut sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
