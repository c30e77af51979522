//! `dominion`: certify, decouple and simulate singularly perturbed systems
//! from JSON configs.
//!
//! Exit status: 0 when every requested check passed, 2 when a mathematical
//! check failed, 1 for usage or configuration errors.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dominion::ProbeOptions;

use crate::commands::{Ctx, ReproduceOptions};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "dominion", version, about = "Dominance certificates for singularly perturbed systems")]
struct Cli {
    /// Leave the generation time out of reports, so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the slow and fast LMIs of the configured certificate.
    Certify {
        config: PathBuf,
        /// Report path (default: <config-stem>.certify.json next to the config).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute the Chang decoupling transformation at a given eps.
    Decouple {
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search for the largest eps at which the decoupled block conditions hold.
    EpsilonStar {
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Integrate every initial condition and classify convergence.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 9.0)]
        t_final: f64,
        #[arg(long)]
        out: PathBuf,
        /// RK4 step (default: min(1e-3, eps/20)).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Check cone invariance of trajectory differences on random pairs.
    MonotoneProbe {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 9.0)]
        t_final: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run every analysis on the built-in oscillator example.
    ReproducePaper {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        sigma_r: f64,
        /// Simulation horizon. The slowest trajectory needs about t = 20 to
        /// settle within the convergence tolerance.
        #[arg(long, default_value_t = 20.0)]
        t_final: f64,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 9.0)]
        probe_t_final: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<u8> {
    let ctx = Ctx { timestamp: !cli.no_timestamp };
    match cli.command {
        Command::Certify { config, report } => commands::certify(ctx, &config, report),
        Command::Decouple { config, eps, report } => commands::decouple(ctx, &config, eps, report),
        Command::EpsilonStar { config, report } => commands::epsilon_star(ctx, &config, report),
        Command::Simulate { config, t_final, out, step } => commands::simulate(ctx, &config, t_final, &out, step),
        Command::MonotoneProbe { config, pairs, t_final, seed, report } => {
            let opts = ProbeOptions { n_pairs: pairs, t_final, seed, ..ProbeOptions::default() };
            commands::monotone_probe_cmd(ctx, &config, opts, report)
        }
        Command::ReproducePaper { out, eps, sigma_r, t_final, pairs, probe_t_final, seed } => {
            let probe = ProbeOptions { n_pairs: pairs, t_final: probe_t_final, seed, ..ProbeOptions::default() };
            commands::reproduce_paper(ctx, &out, ReproduceOptions { eps, sigma_r, t_final, probe })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
