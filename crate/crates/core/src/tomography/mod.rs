//! Density-matrix reconstruction from coincidence counts.
//!
//! A least-squares linear inversion provides the starting point; the
//! maximum-likelihood search then returns a physical state. Metrics follow
//! the squared (Jozsa) fidelity convention and report the linear entropy in
//! both the normalised and unnormalised forms.

pub mod lbfgs;
pub mod metrics;
mod mle;

use serde::{Deserialize, Serialize};

pub use metrics::{
    concurrence, fidelity, linear_entropy, linear_entropy_unnormalized, nearest_code_state, tangle,
    visibility, NearestCodeState, StateMetrics, VisibilityBasis,
};
pub use mle::{log_likelihood, mle_reconstruct, Likelihood, MleOptions, MleResult, TParameterization};

use crate::channels::DensityMatrix;
use crate::error::{Error, Result};
use crate::experiment_sim::{Polarization, Setting, TomographyRecord};
use crate::matrix_core::{self, from_complex_rows, identity, kron, to_complex_rows, ComplexMatrix};

pub const SCHEMA_VERSION: u32 = 1;

/// How the expected pair number `N_s` per setting is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `pair_rate · duration` from the record.
    FromConfig,
    /// Mean total over the complete local basis pairs (such as `{H,V}×{D,A}`)
    /// present in the record.
    EstimatedFromCounts,
}

const LOCAL_BASES: [(Polarization, Polarization); 3] = [
    (Polarization::H, Polarization::V),
    (Polarization::D, Polarization::A),
    (Polarization::R, Polarization::L),
];

/// Per-setting normalisation `N_s`.
pub fn setting_totals(rec: &TomographyRecord, normalization: Normalization) -> Result<Vec<f64>> {
    let n = match normalization {
        Normalization::FromConfig => rec.config().pairs_per_setting(),
        Normalization::EstimatedFromCounts => {
            let mut sums = Vec::new();
            for (a, b) in LOCAL_BASES {
                for (x, y) in LOCAL_BASES {
                    let group = [(a, x), (a, y), (b, x), (b, y)]
                        .map(|(p, q)| rec.count_for(Setting::new(p, q)));
                    if group.iter().all(Option::is_some) {
                        sums.push(group.iter().map(|c| c.unwrap() as f64).sum::<f64>());
                    }
                }
            }
            if sums.is_empty() {
                return Err(Error::InvalidParameter(
                    "no complete local basis pair to estimate the flux from".into(),
                ));
            }
            sums.iter().sum::<f64>() / sums.len() as f64
        }
    };
    if !(n > 0.0) {
        return Err(Error::InvalidParameter("estimated flux is zero".into()));
    }
    Ok(vec![n; rec.settings().len()])
}

/// The 15 non-identity two-qubit Pauli products.
fn pauli_basis() -> Vec<ComplexMatrix> {
    let singles = [
        identity(2),
        matrix_core::pauli_x(),
        matrix_core::pauli_y(),
        matrix_core::pauli_z(),
    ];
    let mut out = Vec::with_capacity(15);
    for (i, a) in singles.iter().enumerate() {
        for (j, b) in singles.iter().enumerate() {
            if i + j > 0 {
                out.push(kron(a, b));
            }
        }
    }
    out
}

/// Least-squares state with `N_s = pair_rate · duration`.
pub fn linear_inversion(rec: &TomographyRecord) -> Result<ComplexMatrix> {
    linear_inversion_with(rec, Normalization::FromConfig)
}

/// Least-squares solution of `Tr(ρ Π_s) = n_s / N_s` over Hermitian,
/// unit-trace `ρ = (I + Σ r_k P_k)/4`. The result may have negative
/// eigenvalues.
pub fn linear_inversion_with(rec: &TomographyRecord, normalization: Normalization) -> Result<ComplexMatrix> {
    let totals = setting_totals(rec, normalization)?;
    let paulis = pauli_basis();
    let kets: Vec<_> = rec.settings().iter().map(Setting::ket).collect();
    let rows = kets.len();
    // A[s, k] = Tr(Π_s P_k)/4; rhs = p_s − Tr(Π_s)/4.
    let a = nalgebra::DMatrix::<f64>::from_fn(rows, 15, |s, k| {
        0.25 * kets[s].dotc(&(&paulis[k] * &kets[s])).re
    });
    let rhs = nalgebra::DVector::<f64>::from_fn(rows, |s, _| {
        rec.counts()[s] as f64 / totals[s] - 0.25
    });
    let normal = (a.transpose() * &a).map(|v| matrix_core::c(v, 0.0));
    let eig = matrix_core::eig_hermitian_unchecked(&normal);
    let max = eig.max_eigenvalue();
    let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-10 * max).count();
    if rank < 15 {
        return Err(Error::InformationallyIncomplete { rank, needed: 15 });
    }
    let inverse = eig.reconstruct_with(|l| 1.0 / l);
    let atb = (a.transpose() * rhs).map(|v| matrix_core::c(v, 0.0));
    let r = inverse * atb;
    let mut rho = identity(4).scale(0.25);
    for (k, p) in paulis.iter().enumerate() {
        rho += p.scale(0.25 * r[k].re);
    }
    Ok(rho)
}

/// Clips negative eigenvalues of a Hermitian estimate and renormalises.
///
/// Falls back to `I/4` when nothing positive remains.
pub fn clip_to_state(m: &ComplexMatrix) -> DensityMatrix {
    let eig = matrix_core::eig_hermitian_unchecked(m);
    let clipped = eig.reconstruct_with(|l| l.max(0.0));
    let tr = clipped.trace().re;
    if !(tr > 1e-12) {
        return DensityMatrix::maximally_mixed(m.nrows());
    }
    let herm = (&clipped + clipped.adjoint()).scale(0.5 / tr);
    DensityMatrix::new(herm).unwrap_or_else(|_| DensityMatrix::maximally_mixed(m.nrows()))
}

/// Optimizer diagnostics attached to a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_norm: f64,
    pub log_likelihood: f64,
    pub likelihood: Likelihood,
}

/// Reconstructed state with metrics, as emitted by the `tomo` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub schema_version: u32,
    pub density_matrix: Vec<Vec<[f64; 2]>>,
    pub metrics: StateMetrics,
    pub nearest_code_state: NearestCodeState,
    pub convergence: Convergence,
    pub fidelity_convention: String,
    pub linear_entropy_convention: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub const FIDELITY_CONVENTION: &str = "squared (Jozsa): F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2";
pub const LINEAR_ENTROPY_CONVENTION: &str =
    "normalized: S_L = d/(d-1) (1 - Tr rho^2); linear_entropy_unnormalized = 1 - Tr rho^2";

impl StateReport {
    pub fn new(result: &MleResult, likelihood: Likelihood, reference: Option<&DensityMatrix>) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            density_matrix: to_complex_rows(result.state.matrix()),
            metrics: StateMetrics::compute(&result.state, reference)?,
            nearest_code_state: nearest_code_state(&result.state)?,
            convergence: Convergence {
                converged: result.converged,
                iterations: result.iterations,
                evaluations: result.evaluations,
                grad_norm: result.grad_norm,
                log_likelihood: result.log_likelihood,
                likelihood,
            },
            fidelity_convention: FIDELITY_CONVENTION.into(),
            linear_entropy_convention: LINEAR_ENTROPY_CONVENTION.into(),
            warnings: result.warning.iter().cloned().collect(),
        })
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(from_complex_rows(&self.density_matrix)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", r.schema_version)));
        }
        Ok(r)
    }
}

/// Reconstructs a record and bundles the report.
pub fn reconstruct_report(
    rec: &TomographyRecord,
    opts: &MleOptions,
    reference: Option<&DensityMatrix>,
) -> Result<StateReport> {
    let result = mle_reconstruct(rec, opts)?;
    StateReport::new(&result, opts.likelihood, reference)
}
