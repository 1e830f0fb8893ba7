//! Experiment harness over the `vigrad` gradient estimators.

mod cache;
mod commands;
mod error;
mod output;
mod registry;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cross_section, fit, mnist_ingest, sweep, var_table};

#[derive(Parser)]
#[command(
    name = "vigrad",
    about = "Variance analysis and fitting for ELBO gradient estimators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo variance table across a sigma grid (true vs quadratic h).
    VarTable(var_table::VarTableArgs),
    /// Marginal-variance sweeps along iterations, one mean coordinate, or a
    /// common scale.
    Sweep(sweep::SweepArgs),
    /// Delta-function cross sections along one coordinate.
    CrossSection(cross_section::CrossSectionArgs),
    /// Run variational inference; writes a trace CSV and final parameters.
    Fit(fit::FitArgs),
    /// Validate IDX files and build the binary dataset cache.
    MnistIngest(mnist_ingest::MnistIngestArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VarTable(args) => var_table::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::CrossSection(args) => cross_section::run(args),
        Command::Fit(args) => fit::run(args),
        Command::MnistIngest(args) => mnist_ingest::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
