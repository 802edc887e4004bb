//! `idla`: grow clusters, run invariant suites, fit fluctuation exponents and
//! export potential-theory constants.

mod config;
mod fluct;
mod grow;
mod output;
mod report;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Common, RunConfig};

/// Failures that map to exit codes 2 and 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

#[derive(Parser, Debug)]
#[command(name = "idla", version, about = "Internal DLA and flashing-process laboratory")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grow clusters and write snapshots and error records.
    Grow(grow::GrowArgs),
    /// Run an invariant suite and write a JSON report.
    Verify(verify::VerifyArgs),
    /// Run a fluctuation ensemble (resumable) and fit the exponent.
    Fluct(fluct::FluctArgs),
    /// Coupon-collector tail experiment.
    Coupon(report::CouponArgs),
    /// Mean-value, annulus and Green function constants.
    PotentialReport(report::PotentialArgs),
}

macro_rules! by_dim {
    ($d:expr, $($f:ident)::+, $($arg:expr),*) => {
        match $d {
            3 => $($f)::+::<3>($($arg),*),
            4 => $($f)::+::<4>($($arg),*),
            5 => $($f)::+::<5>($($arg),*),
            6 => $($f)::+::<6>($($arg),*),
            d => unreachable!("dimension {d} passed validation"),
        }
    };
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(&cli.common)?;
    rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global().ok();
    match &cli.command {
        Command::Grow(a) => by_dim!(cfg.d, grow::run, &cfg, a),
        Command::Verify(a) => by_dim!(cfg.d, verify::run, &cfg, a),
        Command::Fluct(a) => by_dim!(cfg.d, fluct::run, &cfg, a),
        Command::Coupon(a) => by_dim!(cfg.d, report::coupon, &cfg, a),
        Command::PotentialReport(a) => by_dim!(cfg.d, report::potential, &cfg, a),
    }
}

/// Saves the replay bundle of a coupling failure next to the outputs.
fn save_bundle(cli: &Cli, bundle: &str) -> Option<std::path::PathBuf> {
    let dir = RunConfig::resolve(&cli.common).ok()?.output_dir;
    std::fs::create_dir_all(&dir).ok()?;
    let path = dir.join("repro-bundle.json");
    std::fs::write(&path, bundle).ok()?;
    Some(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(CliError::Usage(m)) = e.downcast_ref::<CliError>() {
                eprintln!("error: {m}");
                return ExitCode::from(2);
            }
            if let Some(idla_core::Error::CouplingInvariant { bundle, .. }) = e.downcast_ref::<idla_core::Error>() {
                if let Some(path) = save_bundle(&cli, bundle) {
                    eprintln!("repro bundle written to {}", path.display());
                }
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
