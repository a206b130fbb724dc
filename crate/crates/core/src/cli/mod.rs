//! Command-line surface: `discover`, `run`, `sweep` and `tomo`.
//!
//! Exit statuses: 0 success, 1 I/O failure, 2 usage error (from the argument
//! parser), 3 parse error, 4 validation error, 5 non-unital channel.

pub mod args;
pub mod commands;
pub mod documents;

use std::fs;
use std::path::Path;

pub use args::Cli;
use args::Command;
use commands::{cmd_discover, cmd_run, cmd_sweep, cmd_tomo, stage_records, theta_grid, RunParams};
use documents::{ChannelSpec, ReferenceSpec};

use crate::experiment_sim::{PrepParams, TomographyRecord};
use crate::tomography::MleOptions;
use crate::tomography::Normalization;
use crate::{Error, Result};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_NON_UNITAL: u8 = 5;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Parse(_) => EXIT_PARSE,
        Error::NotUnital => EXIT_NON_UNITAL,
        _ => EXIT_VALIDATION,
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn emit(text: &str, document: &str, output: &args::OutputArgs) -> Result<()> {
    if let Some(path) = &output.out {
        fs::write(path, document)?;
    }
    if output.json {
        println!("{document}");
    } else {
        print!("{text}");
    }
    Ok(())
}

/// Runs a parsed command line, printing to standard output.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Discover(a) => {
            let spec = match (&a.path, &a.builtin) {
                (Some(p), _) => ChannelSpec::from_json(&read(p)?)?,
                (None, Some(name)) => ChannelSpec::builtin(name),
                (None, None) => return Err(Error::InvalidParameter("give a spec path or --builtin".into())),
            };
            let doc = cmd_discover(&spec, a.tol, a.seed)?;
            emit(&doc.summary(), &doc.to_json(), &a.output)
        }
        Command::Run(a) => {
            let params = RunParams {
                prep: PrepParams {
                    theta_deg: a.theta,
                    phi_deg: a.phi,
                    mixing: a.mixing.resolve()?,
                },
                acquisition: a.acquisition.config(),
                recovery: a.recovery,
            };
            let report = cmd_run(&params)?;
            if let Some(dir) = &a.save_records {
                fs::create_dir_all(dir)?;
                for (name, rec) in commands::STAGES.iter().zip(stage_records(&params)?) {
                    fs::write(dir.join(format!("{name}.json")), rec.to_json())?;
                }
            }
            emit(&report.summary(), &report.to_json(), &a.output)
        }
        Command::Sweep(a) => {
            let thetas = if a.thetas.is_empty() {
                theta_grid(a.theta_start, a.theta_stop, a.theta_step)?
            } else {
                a.thetas.clone()
            };
            let table = cmd_sweep(&thetas, a.phi, a.mixing.resolve()?, &a.acquisition.config(), a.recovery)?;
            let csv = table.to_csv();
            match &a.out {
                Some(path) => {
                    fs::write(path, &csv)?;
                    println!("wrote {} rows to {}", table.rows.len(), path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Tomo(a) => {
            let rec = TomographyRecord::from_json(&read(&a.record)?)?;
            let reference = match &a.reference {
                Some(p) => Some(ReferenceSpec::from_json(&read(p)?)?.state()?),
                None => None,
            };
            let opts = MleOptions {
                likelihood: a.likelihood.into(),
                normalization: if a.estimate_flux {
                    Normalization::EstimatedFromCounts
                } else {
                    Normalization::FromConfig
                },
                seed: a.seed,
                ..MleOptions::default()
            };
            let report = cmd_tomo(&rec, reference.as_ref(), &opts)?;
            emit(&commands::state_report_summary(&report), &report.to_json(), &a.output)
        }
    }
}
