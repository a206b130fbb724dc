//! State quality and entanglement measures.

use serde::{Deserialize, Serialize};

use crate::channels::DensityMatrix;
use crate::error::{Error, Result};
use crate::experiment_sim::{setting_probability, Polarization, Setting};
use crate::matrix_core::{self, kron, pauli_y, sqrt_psd_truncated, ComplexMatrix};

/// Relative eigenvalue cutoff for square roots of states. Rounding leaves
/// eigenvalues near 1e-17 where the exact value is zero, whose square roots
/// would otherwise bias fidelities by ~1e-8.
const SQRT_CUTOFF: f64 = 1e-14;

/// Jozsa fidelity `(Tr √(√ρ σ √ρ))²`, clipped to `[0, 1]`.
///
/// Computed as the squared trace norm of `√ρ √σ`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let a = sqrt_psd_truncated(rho.matrix(), SQRT_CUTOFF);
    let b = sqrt_psd_truncated(sigma.matrix(), SQRT_CUTOFF);
    let trace_norm: f64 = matrix_core::singular_values(&(a * b)).iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

fn ensure_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    Ok(())
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// The `λᵢ` (square roots of the eigenvalues of `ρ ρ̃`) are the singular
/// values of `√ρ √ρ̃` with `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    ensure_two_qubit(rho)?;
    let yy = kron(&pauli_y(), &pauli_y());
    let sqrt_rho = sqrt_psd_truncated(rho.matrix(), SQRT_CUTOFF);
    // √ρ̃ = YY (√ρ)* YY since YY is a real orthogonal involution.
    let sqrt_tilde = &yy * sqrt_rho.map(|z| z.conj()) * &yy;
    let l = matrix_core::singular_values(&(sqrt_rho * sqrt_tilde));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0).min(1.0))
}

/// Tangle `τ = C²`.
pub fn tangle(rho: &DensityMatrix) -> Result<f64> {
    Ok(concurrence(rho)?.powi(2))
}

/// Normalised linear entropy `d/(d−1)·(1 − Tr ρ²)`, in `[0, 1]`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    let d = rho.dim() as f64;
    if d <= 1.0 {
        return 0.0;
    }
    (d / (d - 1.0) * (1.0 - rho.purity())).clamp(0.0, 1.0)
}

/// Unnormalised linear entropy `1 − Tr ρ²`, in `[0, 1 − 1/d]`.
pub fn linear_entropy_unnormalized(rho: &DensityMatrix) -> f64 {
    (1.0 - rho.purity()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VisibilityBasis {
    #[serde(rename = "HV")]
    Hv,
    #[serde(rename = "DA")]
    Da,
}

/// Two-photon correlation contrast `(C_corr − C_anti)/(C_corr + C_anti)`.
pub fn visibility(rho: &DensityMatrix, basis: VisibilityBasis) -> Result<f64> {
    ensure_two_qubit(rho)?;
    let (a, b) = match basis {
        VisibilityBasis::Hv => (Polarization::H, Polarization::V),
        VisibilityBasis::Da => (Polarization::D, Polarization::A),
    };
    let p = |x, y| setting_probability(rho, Setting::new(x, y));
    let corr = p(a, a) + p(b, b);
    let anti = p(a, b) + p(b, a);
    Ok((corr - anti) / (corr + anti))
}

/// The pure code state `cos2θ|HH⟩ + sin2θ e^{iφ}|VV⟩` closest to a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestCodeState {
    /// In `[0°, 45°]`.
    pub theta_deg: f64,
    /// In `(−180°, 180°]`.
    pub phi_deg: f64,
    /// `⟨ψ|ρ|ψ⟩`, the fidelity of `ρ` with that pure state.
    pub overlap: f64,
}

/// Maximises `⟨ψ(θ,φ)|ρ|ψ(θ,φ)⟩` over the code states.
///
/// Every unit vector of `span{|HH⟩, |VV⟩}` is such a state up to a global
/// phase, so the optimum is the top eigenvector of the compression of `ρ`.
pub fn nearest_code_state(rho: &DensityMatrix) -> Result<NearestCodeState> {
    ensure_two_qubit(rho)?;
    let m = rho.matrix();
    let block = ComplexMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 3)], m[(3, 0)], m[(3, 3)]]);
    let eig = matrix_core::eig_hermitian_unchecked(&block);
    let (u0, u3) = (eig.eigenvectors[(0, 1)], eig.eigenvectors[(1, 1)]);
    let a = u0.norm();
    let rel = if a > 0.0 { u3 * u0.conj() / a } else { u3 };
    let b = rel.norm();
    let theta = 0.5 * b.atan2(a);
    let phi = if b > 1e-15 { rel.arg() } else { 0.0 };
    let phi_deg = if phi <= -std::f64::consts::PI { 180.0 } else { phi.to_degrees() };
    Ok(NearestCodeState {
        theta_deg: theta.to_degrees(),
        phi_deg,
        overlap: eig.max_eigenvalue().clamp(0.0, 1.0),
    })
}

/// Metrics reported for every reconstructed or simulated state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_to_reference: Option<f64>,
    pub tangle: f64,
    /// Normalised convention `d/(d−1)·(1 − Tr ρ²)`.
    pub linear_entropy: f64,
    /// `1 − Tr ρ²`.
    pub linear_entropy_unnormalized: f64,
    pub visibility_hv: f64,
    pub visibility_da: f64,
}

impl StateMetrics {
    pub fn compute(rho: &DensityMatrix, reference: Option<&DensityMatrix>) -> Result<Self> {
        Ok(Self {
            fidelity_to_reference: reference.map(|r| fidelity(rho, r)).transpose()?,
            tangle: tangle(rho)?,
            linear_entropy: linear_entropy(rho),
            linear_entropy_unnormalized: linear_entropy_unnormalized(rho),
            visibility_hv: visibility(rho, VisibilityBasis::Hv)?,
            visibility_da: visibility(rho, VisibilityBasis::Da)?,
        })
    }
}
