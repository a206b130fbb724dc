//! Argument definitions for the `ucc` binary.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use super::commands::Recovery;
use crate::code_finder::DEFAULT_TOL;
use crate::experiment_sim::{mixing_for_bell_visibility, mixing_for_target_fidelity, AcquisitionConfig, AcquisitionMode};
use crate::tomography::Likelihood;
use crate::Result;

#[derive(Debug, Parser)]
#[command(name = "ucc", version, about = "Unitarily correctable codes: discovery, simulation and tomography")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find noiseless subsystems and unitarily correctable codes of a channel.
    Discover(DiscoverArgs),
    /// Prepare, add noise, correct, and tomograph each stage.
    Run(RunArgs),
    /// Run over a list of θ and emit a CSV table.
    Sweep(SweepArgs),
    /// Reconstruct a state from a count record.
    Tomo(TomoArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the machine-readable document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the document instead of the summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AcquisitionArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = AcquisitionMode::Exact)]
    pub mode: AcquisitionMode,
    /// Coincidence rate, counts per second.
    #[arg(long, default_value_t = 12_000.0)]
    pub rate: f64,
    /// Integration time per setting, seconds.
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
}

impl AcquisitionArgs {
    pub fn config(&self) -> AcquisitionConfig {
        AcquisitionConfig {
            pair_rate: self.rate,
            duration: self.duration,
            seed: self.seed,
            mode: self.mode,
            ..AcquisitionConfig::default()
        }
    }
}

/// White-noise weight, given directly or by the quantity it should produce.
#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct MixingArgs {
    /// Weight of I/4 in the prepared state.
    #[arg(long)]
    pub mixing: Option<f64>,
    /// Choose the mixing that gives |φ⁺⟩ this D/A visibility.
    #[arg(long)]
    pub da_visibility: Option<f64>,
    /// Choose the mixing that gives this fidelity to the pure target.
    #[arg(long)]
    pub target_fidelity: Option<f64>,
}

impl MixingArgs {
    pub fn resolve(&self) -> Result<f64> {
        match (self.mixing, self.da_visibility, self.target_fidelity) {
            (Some(m), _, _) => Ok(m),
            (_, Some(v), _) => mixing_for_bell_visibility(v),
            (_, _, Some(f)) => mixing_for_target_fidelity(f),
            _ => Ok(0.0),
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["path", "builtin"])))]
pub struct DiscoverArgs {
    /// Channel specification file.
    pub path: Option<PathBuf>,
    /// Builtin channel: `anticorrelated-phase-flip`.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Seed for the candidate-recovery checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Source angle θ, degrees.
    #[arg(long)]
    pub theta: f64,
    /// Relative phase φ, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    #[command(flatten)]
    pub mixing: MixingArgs,
    #[command(flatten)]
    pub acquisition: AcquisitionArgs,
    #[arg(long, value_enum, default_value_t = Recovery::Z2)]
    pub recovery: Recovery,
    /// Write the three stage count records into this directory.
    #[arg(long)]
    pub save_records: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Explicit θ values, comma separated; overrides the range flags.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub thetas: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub theta_start: f64,
    #[arg(long, default_value_t = 90.0)]
    pub theta_stop: f64,
    #[arg(long, default_value_t = 2.5)]
    pub theta_step: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    #[command(flatten)]
    pub mixing: MixingArgs,
    #[command(flatten)]
    pub acquisition: AcquisitionArgs,
    #[arg(long, value_enum, default_value_t = Recovery::Z2)]
    pub recovery: Recovery,
    /// Write the CSV table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LikelihoodArg {
    Poisson,
    Gaussian,
}

impl From<LikelihoodArg> for Likelihood {
    fn from(l: LikelihoodArg) -> Self {
        match l {
            LikelihoodArg::Poisson => Likelihood::Poisson,
            LikelihoodArg::Gaussian => Likelihood::Gaussian,
        }
    }
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Count record file.
    pub record: PathBuf,
    /// Reference state: a document with `density_matrix`, or with `prep`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LikelihoodArg::Poisson)]
    pub likelihood: LikelihoodArg,
    /// Estimate each setting's pair number from its basis group instead of
    /// the recorded rate × duration.
    #[arg(long)]
    pub estimate_flux: bool,
    /// Seed for the random optimizer starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}
