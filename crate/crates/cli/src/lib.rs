//! Experiment harness behind the `mgf` binary. Every subcommand writes a CSV
//! (and optionally an SVG) into `--out` and reports failed assertions.

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};

pub use commands::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] mgf_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "mgf", version, about = "Momentum gradient flow vs ridge: curves, bounds and limits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shrinkage maps of MGF, ridge and GF over an (s, t) grid.
    ShrinkageMap(commands::ShrinkageArgs),
    /// Bayes risk curves on an isotropic Gaussian design.
    RiskCurves(commands::RiskCurveArgs),
    /// Grid verification of every bound.
    BoundsCheck(commands::BoundsArgs),
    /// Heavy-ball discretization gap and its first-order decay.
    Discretization(commands::DiscretizationArgs),
    /// Finite-sample risks against Marchenko-Pastur limits.
    MpCompare(commands::MpCompareArgs),
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::ShrinkageMap(a) => commands::shrinkage_map(a),
        Command::RiskCurves(a) => commands::risk_curves(a),
        Command::BoundsCheck(a) => commands::bounds_check(a),
        Command::Discretization(a) => commands::discretization(a),
        Command::MpCompare(a) => commands::mp_compare(a),
    }
}

pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
