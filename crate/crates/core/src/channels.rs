//! Quantum channels in Kraus form and density matrices.


use crate::error::{Error, Result};
use crate::matrix_core::{
    self, ensure_finite, ensure_square, ensure_unitary, hermitian_deviation, identity, kron, max_abs,
    outer, pauli_z, ComplexMatrix, ComplexVector,
};

/// Accepted deviation of `Σ K†K` from the identity, largest entry.
pub const TRACE_PRESERVING_TOL: f64 = 1e-8;

const DENSITY_TOL: f64 = 1e-10;
const POSITIVITY_SLACK: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-10;

/// `Z₁ = σ_z ⊗ I`.
pub fn z1() -> ComplexMatrix {
    kron(&pauli_z(), &identity(2))
}

/// `Z₂ = I ⊗ σ_z`.
pub fn z2() -> ComplexMatrix {
    kron(&identity(2), &pauli_z())
}

/// Controlled-phase gate `diag(1, 1, 1, −1)`.
pub fn controlled_z() -> ComplexMatrix {
    matrix_core::diag_real(&[1.0, 1.0, 1.0, -1.0])
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `mat` as a state.
    ///
    /// The Hermitian part is kept. Eigenvalues in `[−1e-9, 0)` are clipped to
    /// zero and the result renormalised; more negative eigenvalues are errors.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        ensure_square(&mat)?;
        ensure_finite(&mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let herm = (&mat + mat.adjoint()).scale(0.5);
        let eig = matrix_core::eig_hermitian_unchecked(&herm);
        let min = eig.min_eigenvalue();
        if min < -POSITIVITY_SLACK {
            return Err(Error::NotPositive(min));
        }
        if min < 0.0 {
            let clipped = eig.reconstruct_with(|l| l.max(0.0));
            let t = clipped.trace();
            return Ok(Self(clipped / t));
        }
        Ok(Self(herm))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) nonzero vector.
    pub fn from_pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("state vector has zero norm".into()));
        }
        let psi = psi.unscale(norm);
        Ok(Self(outer(&psi)))
    }

    /// Wraps a matrix already known to be a state, e.g. `UρU†` of one.
    pub(crate) fn from_valid_unchecked(mat: ComplexMatrix) -> Self {
        Self(mat)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim).unscale(dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability `Tr(ρ Π)` of a projector or effect `Π`.
    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        matrix_core::hs_inner(op, &self.0).re
    }

    /// `(1 − w)·ρ + w·σ`.
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Result<DensityMatrix> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        DensityMatrix::new(self.0.scale(1.0 - weight) + other.0.scale(weight))
    }
}

/// A completely positive trace-preserving map stored as its Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus_ops: Vec<ComplexMatrix>,
}

/// Builds a channel, checking that `Σ K†K = I`.
pub fn make_channel(ops: Vec<ComplexMatrix>) -> Result<KrausChannel> {
    KrausChannel::new(ops)
}

impl KrausChannel {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or(Error::Empty)?;
        let dim = ensure_square(first)?;
        for k in &ops {
            let d = ensure_square(k)?;
            if d != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d });
            }
            ensure_finite(k)?;
        }
        let channel = Self { dim, kraus_ops: ops };
        let residual = channel.trace_preservation_residual();
        if residual > TRACE_PRESERVING_TOL {
            return Err(Error::NotTracePreserving(residual));
        }
        Ok(channel)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus_ops: vec![identity(dim)],
        }
    }

    /// The map `ρ ↦ UρU†`.
    pub fn from_unitary(u: ComplexMatrix) -> Result<Self> {
        ensure_unitary(&u, UNITARY_TOL)?;
        Ok(Self {
            dim: u.nrows(),
            kraus_ops: vec![u],
        })
    }

    /// The two-qubit channel `ρ ↦ ½Z₁ρZ₁ + ½Z₂ρZ₂`.
    pub fn anticorrelated_phase_flip() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            dim: 4,
            kraus_ops: vec![z1().scale(s), z2().scale(s)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }

    /// Largest entry of `|Σ K†K − I|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let sum = self
            .kraus_ops
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k);
        max_abs(&(sum - identity(self.dim)))
    }

    /// `Σ K X K†` on an arbitrary operator.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.nrows(),
            });
        }
        Ok(self
            .kraus_ops
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * x * k.adjoint()))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_operator(rho.matrix())?)
    }

    /// The Kraus set `{K†}`, satisfying `Tr(E(ρ)X) = Tr(ρE†(X))`.
    pub fn dual(&self) -> KrausChannel {
        Self {
            dim: self.dim,
            kraus_ops: self.kraus_ops.iter().map(|k| k.adjoint()).collect(),
        }
    }

    /// `second ∘ first`, with all pairwise products kept.
    pub fn compose(second: &KrausChannel, first: &KrausChannel) -> Result<KrausChannel> {
        if second.dim != first.dim {
            return Err(Error::DimensionMismatch {
                expected: second.dim,
                got: first.dim,
            });
        }
        let kraus_ops = second
            .kraus_ops
            .iter()
            .flat_map(|a| first.kraus_ops.iter().map(move |b| a * b))
            .collect();
        KrausChannel::new(kraus_ops)
    }

    /// True iff `‖Σ K K† − I‖_F < tol`.
    pub fn is_unital(&self, tol: f64) -> bool {
        let sum = self
            .kraus_ops
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * k.adjoint());
        matrix_core::frobenius(&(sum - identity(self.dim))) < tol
    }

    /// Probability weights `Tr(K ρ K†)` of each Kraus branch.
    pub fn branch_weights(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.kraus_ops
            .iter()
            .map(|k| (k * rho.matrix() * k.adjoint()).trace().re)
            .collect()
    }
}

pub fn dual(e: &KrausChannel) -> KrausChannel {
    e.dual()
}

pub fn compose(second: &KrausChannel, first: &KrausChannel) -> Result<KrausChannel> {
    KrausChannel::compose(second, first)
}

pub fn channel_from_unitary(u: ComplexMatrix) -> Result<KrausChannel> {
    KrausChannel::from_unitary(u)
}

pub fn builtin_anticorrelated_phase_flip() -> KrausChannel {
    KrausChannel::anticorrelated_phase_flip()
}
