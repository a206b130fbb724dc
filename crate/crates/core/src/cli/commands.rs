//! The four commands as library functions; `execute` wires them to the
//! argument parser and the filesystem.

use rayon::prelude::*;

use super::documents::{
    CandidateCheck, ChannelSpec, CodeEntry, DiscoveryDocument, RunConfig, RunReport, StageReport, SweepMeta,
    SweepRow, SweepTable, SCHEMA_VERSION,
};
use crate::channels::{controlled_z, z1, z2, DensityMatrix, KrausChannel};
use crate::code_finder::{find_noiseless_subsystems, find_ucc, verify_correction_seeded, CodeReport};
use crate::experiment_sim::{
    code_state_vector, noise_exact, prep_code_state, simulate_counts, AcquisitionConfig, AcquisitionMode,
    PrepParams, TomographyRecord,
};
use crate::matrix_core::{identity, to_complex_rows, ComplexMatrix};
use crate::random::derive_seed;
use crate::tomography::metrics::{fidelity, nearest_code_state, StateMetrics};
use crate::tomography::{mle_reconstruct, reconstruct_report, Convergence, MleOptions, StateReport};
use crate::{Error, Result};

/// Trials per candidate when `discover` checks {Z₁, Z₂, CZ}.
pub const CANDIDATE_TRIALS: usize = 100;
pub const CANDIDATE_TOL: f64 = 1e-8;

/// Finds the passive codes and the unitarily correctable codes of a channel.
///
/// For two-qubit channels each correctable code also lists which of
/// `Z₁`, `Z₂` and `CZ` satisfy the correction condition.
pub fn cmd_discover(spec: &ChannelSpec, tol: f64, seed: u64) -> Result<DiscoveryDocument> {
    let e = spec.to_channel()?;
    let noiseless = find_noiseless_subsystems(&e, tol)?;
    let ucc = find_ucc(&e, tol)?;
    let candidates = |code: &CodeReport| -> Result<Vec<CandidateCheck>> {
        if e.dim() != 4 {
            return Ok(Vec::new());
        }
        [("Z1", z1()), ("Z2", z2()), ("CZ", controlled_z())]
            .iter()
            .map(|(name, u)| {
                let v = verify_correction_seeded(&e, u, code, CANDIDATE_TRIALS, CANDIDATE_TOL, seed)?;
                Ok(CandidateCheck::new(name, &v))
            })
            .collect()
    };
    Ok(DiscoveryDocument {
        schema_version: SCHEMA_VERSION,
        channel: spec.id(),
        dim: e.dim(),
        tol,
        noiseless: noiseless.iter().map(|c| CodeEntry::from_report(c, Vec::new())).collect(),
        ucc: ucc
            .iter()
            .map(|c| Ok(CodeEntry::from_report(c, candidates(c)?)))
            .collect::<Result<_>>()?,
    })
}

/// Unitary applied after the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Recovery {
    Z1,
    Z2,
    Cz,
    None,
}

impl Recovery {
    pub fn name(self) -> &'static str {
        match self {
            Recovery::Z1 => "Z1",
            Recovery::Z2 => "Z2",
            Recovery::Cz => "CZ",
            Recovery::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "Z1" => Ok(Recovery::Z1),
            "Z2" => Ok(Recovery::Z2),
            "CZ" => Ok(Recovery::Cz),
            "none" => Ok(Recovery::None),
            other => Err(Error::Parse(format!("unknown recovery `{other}`"))),
        }
    }

    pub fn unitary(self) -> ComplexMatrix {
        match self {
            Recovery::Z1 => z1(),
            Recovery::Z2 => z2(),
            Recovery::Cz => controlled_z(),
            Recovery::None => identity(4),
        }
    }
}

/// Inputs of one three-stage run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub prep: PrepParams,
    pub acquisition: AcquisitionConfig,
    pub recovery: Recovery,
}

impl RunParams {
    pub fn new(prep: PrepParams, acquisition: AcquisitionConfig) -> Self {
        Self {
            prep,
            acquisition,
            recovery: Recovery::Z2,
        }
    }

    /// Reconstructs the parameters echoed in a report.
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        if config.channel != super::documents::BUILTIN_ANTICORRELATED {
            return Err(Error::Parse(format!("unsupported channel `{}`", config.channel)));
        }
        Ok(Self {
            prep: config.prep,
            acquisition: config.acquisition,
            recovery: Recovery::from_name(&config.recovery)?,
        })
    }
}

pub const STAGES: [&str; 3] = ["initial", "noisy", "corrected"];

/// True states of the three stages.
pub fn stage_states(params: &RunParams) -> Result<[DensityMatrix; 3]> {
    params.prep.validate()?;
    params.acquisition.validate()?;
    let initial = prep_code_state(&params.prep)?;
    let noisy = noise_exact(&initial)?;
    let corrected = KrausChannel::from_unitary(params.recovery.unitary())?.apply(&noisy)?;
    Ok([initial, noisy, corrected])
}

fn stage_config(acq: &AcquisitionConfig, stage: usize) -> AcquisitionConfig {
    AcquisitionConfig {
        seed: derive_seed(acq.seed, stage as u64),
        ..*acq
    }
}

/// Count records of the three stages; stage `k` draws with seed
/// `derive_seed(seed, k)`.
pub fn stage_records(params: &RunParams) -> Result<[TomographyRecord; 3]> {
    let states = stage_states(params)?;
    let rec = |k: usize| simulate_counts(&states[k], &stage_config(&params.acquisition, k));
    Ok([rec(0)?, rec(1)?, rec(2)?])
}

/// Prepare → (noise) → (correct) → tomograph.
///
/// Exact mode reports the true stage states. Poisson mode samples each
/// stage independently and reconstructs it by maximum likelihood;
/// non-convergence becomes a warning.
pub fn cmd_run(params: &RunParams) -> Result<RunReport> {
    let truth = stage_states(params)?;
    let target = DensityMatrix::from_pure(&code_state_vector(params.prep.theta_deg, params.prep.phi_deg))?;
    let mut warnings = Vec::new();
    let mut estimates: Vec<(DensityMatrix, Option<Convergence>)> = Vec::with_capacity(3);
    match params.acquisition.mode {
        AcquisitionMode::Exact => estimates.extend(truth.iter().map(|s| (s.clone(), None))),
        AcquisitionMode::Poisson => {
            let records = stage_records(params)?;
            for (k, rec) in records.iter().enumerate() {
                let opts = MleOptions {
                    seed: derive_seed(params.acquisition.seed, k as u64),
                    ..MleOptions::default()
                };
                let r = mle_reconstruct(rec, &opts)?;
                if let Some(w) = &r.warning {
                    warnings.push(format!("{}: {w}", STAGES[k]));
                }
                let conv = Convergence {
                    converged: r.converged,
                    iterations: r.iterations,
                    evaluations: r.evaluations,
                    grad_norm: r.grad_norm,
                    log_likelihood: r.log_likelihood,
                    likelihood: opts.likelihood,
                };
                estimates.push((r.state, Some(conv)));
            }
        }
    }
    let stage = |(rho, convergence): &(DensityMatrix, Option<Convergence>)| -> Result<StageReport> {
        Ok(StageReport {
            density_matrix: to_complex_rows(rho.matrix()),
            metrics: StateMetrics::compute(rho, Some(&target))?,
            nearest_code_state: nearest_code_state(rho)?,
            convergence: *convergence,
        })
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: RunConfig {
            prep: params.prep,
            acquisition: params.acquisition,
            channel: super::documents::BUILTIN_ANTICORRELATED.into(),
            recovery: params.recovery.name().into(),
        },
        fidelity_noisy_vs_initial: fidelity(&estimates[1].0, &estimates[0].0)?,
        fidelity_corrected_vs_initial: fidelity(&estimates[2].0, &estimates[0].0)?,
        initial: stage(&estimates[0])?,
        noisy: stage(&estimates[1])?,
        corrected: stage(&estimates[2])?,
        warnings,
    })
}

/// θ from `start` to `stop` inclusive in steps of `step` (degrees).
pub fn theta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidParameter(format!(
            "bad θ grid: start {start}, stop {stop}, step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// 0° to 90° in 2.5° steps: 37 points.
pub fn default_thetas() -> Vec<f64> {
    theta_grid(0.0, 90.0, 2.5).expect("valid default grid")
}

/// Runs every θ concurrently; point `i` uses seed `derive_seed(seed, i)`.
pub fn cmd_sweep(
    thetas: &[f64],
    phi_deg: f64,
    mixing: f64,
    acquisition: &AcquisitionConfig,
    recovery: Recovery,
) -> Result<SweepTable> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("θ list is empty".into()));
    }
    acquisition.validate()?;
    let rows = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta_deg)| {
            let params = RunParams {
                prep: PrepParams {
                    theta_deg,
                    phi_deg,
                    mixing,
                },
                acquisition: AcquisitionConfig {
                    seed: derive_seed(acquisition.seed, i as u64),
                    ..*acquisition
                },
                recovery,
            };
            let r = cmd_run(&params)?;
            Ok(SweepRow {
                theta_deg,
                f_noisy: r.fidelity_noisy_vs_initial,
                f_corrected: r.fidelity_corrected_vs_initial,
                theory: (4.0 * theta_deg.to_radians()).cos().powi(2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        meta: SweepMeta {
            mode: acquisition.mode,
            phi_deg,
            mixing,
            seed: acquisition.seed,
            pair_rate: acquisition.pair_rate,
            duration: acquisition.duration,
        },
        rows,
    })
}

/// Reconstructs a complete record, with fidelity to `reference` if given.
pub fn cmd_tomo(rec: &TomographyRecord, reference: Option<&DensityMatrix>, opts: &MleOptions) -> Result<StateReport> {
    rec.ensure_complete()?;
    reconstruct_report(rec, opts, reference)
}

/// Human-readable rendering of a state report.
pub fn state_report_summary(r: &StateReport) -> String {
    let m = &r.metrics;
    let mut out = String::new();
    if let Some(f) = m.fidelity_to_reference {
        out += &format!("fidelity to reference: {f:.6}\n");
    }
    out += &format!(
        "tangle {:.4}  linear entropy {:.4} (unnormalized {:.4})  V_HV {:.4}  V_DA {:.4}\n",
        m.tangle, m.linear_entropy, m.linear_entropy_unnormalized, m.visibility_hv, m.visibility_da
    );
    let n = &r.nearest_code_state;
    out += &format!(
        "nearest code state: theta {:.2}°, phi {:.2}° (overlap {:.4})\n",
        n.theta_deg, n.phi_deg, n.overlap
    );
    let c = &r.convergence;
    out += &format!(
        "optimizer: converged {} after {} iterations / {} evaluations, |grad| {:.2e}\n",
        c.converged, c.iterations, c.evaluations, c.grad_norm
    );
    for w in &r.warnings {
        out += &format!("warning: {w}\n");
    }
    out
}
