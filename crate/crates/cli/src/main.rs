mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::CliError;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Build the covariance matrix of the two-resonator source
    Simulate,
    /// Evaluate the steering and inseparability criteria of a state
    Analyze,
    /// Run a seeded homodyne measurement campaign on a state
    Sample,
    /// Rebuild a covariance matrix from six measured variances
    Reconstruct,
    /// Fit squeezing and overall efficiency to a covariance matrix
    Fit,
    /// Recompute every reference number from the built-in data set
    Repro,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(
    name = "cvsteer",
    version,
    about = "Two-mode Gaussian EPR-steering toolkit"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Input file (JSON, or CSV for reconstruct)
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Output file [default: standard output]
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Samples per quadrature setting
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Detector dark-noise clearance below vacuum, in dB
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub dark_noise_db: Option<f64>,

    #[arg(long, value_enum, value_name = "json|csv")]
    pub format: Option<Format>,

    /// Relative error of the re-measured inputs in the repro perturbation study
    #[arg(long, value_name = "REL")]
    pub perturb: Option<f64>,

    /// Estimator gains for analyze: `gx,gp` or `optimal`
    #[arg(long, value_name = "gx,gp|optimal", allow_hyphen_values = true)]
    pub gains: Option<String>,

    /// Squeezing parameter of source 1 (simulate)
    #[arg(long)]
    pub r1: Option<f64>,

    /// Squeezing parameter of source 2 (simulate)
    #[arg(long)]
    pub r2: Option<f64>,

    /// Overall efficiency, applied before the beamsplitter (simulate)
    #[arg(long)]
    pub xi: Option<f64>,

    #[arg(long)]
    pub eta_prep: Option<f64>,

    #[arg(long)]
    pub eta_det_a: Option<f64>,

    #[arg(long)]
    pub eta_det_b: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvsteer: {e}");
            ExitCode::from(match e {
                CliError::Input(_) => 2,
                CliError::Analysis(_) => 1,
            })
        }
    }
}
