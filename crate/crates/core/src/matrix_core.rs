//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. Tensor products
//! follow the convention that the left factor is the most significant index,
//! so `kron(σ_z, I)` is `Z₁` acting on photon 1.
//!
//! Singular value and Hermitian eigen decompositions are delegated to `faer`;
//! the complex SVD in `nalgebra` 0.35 can return factors that do not
//! reproduce their input.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Tolerance for Hermiticity checks, absolute on the largest entry deviation.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default relative singular-value cutoff for rank decisions.
pub const NULLSPACE_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    diag_real(&[1.0, -1.0])
}

/// `|v⟩⟨v|`.
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Computational basis vector `|index⟩` in dimension `dim`.
pub fn basis_ket(dim: usize, index: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[index] = ONE;
    v
}

/// Kronecker product; entry `(i·b.rows + k, j·b.cols + l)` is `a[i,j]·b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(ar * br, ac * bc, |row, col| {
        a[(row / br, col / bc)] * b[(row % br, col % bc)]
    })
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.is_square() {
        Ok(a.nrows())
    } else {
        Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

pub fn ensure_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex64> {
    ensure_square(a)?;
    Ok(a.trace())
}

/// Largest absolute entry.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry of `|A − A†|`.
pub fn hermitian_deviation(a: &ComplexMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Largest entry of `|U†U − I|`, or an error if `u` is not square.
pub fn unitary_deviation(u: &ComplexMatrix) -> Result<f64> {
    let n = ensure_square(u)?;
    Ok(max_abs(&(u.adjoint() * u - identity(n))))
}

pub fn ensure_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    let dev = unitary_deviation(u)?;
    if dev > tol {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Hilbert–Schmidt inner product `Tr(A†B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Partial trace of `a` over the subsystems not listed in `keep`.
///
/// `dims` gives the local dimensions with the first entry most significant.
/// Kept subsystems appear in the output in their original order.
pub fn partial_trace(a: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let n = ensure_square(a)?;
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: total,
        });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidParameter(format!(
            "subsystem index {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|i| keep.contains(i)).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let compose = |sub: &[usize], sub_dims: &[usize], mut flat: usize| -> usize {
        let mut offset = 0;
        for k in (0..sub.len()).rev() {
            offset += (flat % sub_dims[k]) * strides[sub[k]];
            flat /= sub_dims[k];
        }
        offset
    };

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for t in 0..traced_total {
        let t_off = compose(&traced, &traced_dims, t);
        for r in 0..out_dim {
            let r_off = compose(&kept, &kept_dims, r) + t_off;
            for col in 0..out_dim {
                let c_off = compose(&kept, &kept_dims, col) + t_off;
                out[(r, col)] += a[(r_off, c_off)];
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigenResult {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenResult {
    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * v.adjoint()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigenResult> {
    ensure_square(a)?;
    ensure_finite(a)?;
    let dev = hermitian_deviation(a);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(eig_hermitian_unchecked(a))
}

/// Eigendecomposition of the Hermitian part `(A + A†)/2` without validation.
pub(crate) fn eig_hermitian_unchecked(a: &ComplexMatrix) -> HermitianEigenResult {
    let n = a.nrows();
    if n == 0 {
        return HermitianEigenResult {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let sym = to_faer(&(a + a.adjoint()).scale(0.5));
    let eig = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigensolver failed to converge");
    let values: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
    let vectors = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, col| vectors[(r, order[col])]);
    HermitianEigenResult {
        eigenvalues,
        eigenvectors,
    }
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are treated as zero; anything more negative
/// is rejected.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(a)?;
    let min = eig.min_eigenvalue();
    if min < -1e-10 {
        return Err(Error::NotPositive(min));
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Square root of the positive part of a Hermitian matrix, with eigenvalues
/// below `rel_cutoff · λ_max` set to zero.
///
/// Rounding leaves eigenvalues of order 1e-16 where the exact value is zero;
/// their square roots would otherwise contribute at the 1e-8 level.
pub(crate) fn sqrt_psd_truncated(a: &ComplexMatrix, rel_cutoff: f64) -> ComplexMatrix {
    let eig = eig_hermitian_unchecked(a);
    let cut = rel_cutoff * eig.max_eigenvalue().max(0.0);
    eig.reconstruct_with(|l| if l > cut { l.sqrt() } else { 0.0 })
}

fn to_faer(a: &ComplexMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular value decomposition `A = U Σ V†` with `σ` descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// SVD; `full` gives square `U` and `V`, otherwise the thin factors.
pub fn svd(a: &ComplexMatrix, full: bool) -> SvdResult {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        let (ur, vc) = if full { (rows, cols) } else { (0, 0) };
        return SvdResult {
            u: identity(ur).resize(rows, ur, ZERO),
            singular_values: Vec::new(),
            v: identity(vc).resize(cols, vc, ZERO),
        };
    }
    let m = to_faer(a);
    let dec = if full { m.svd() } else { m.thin_svd() }.expect("SVD failed to converge");
    let values: Vec<f64> = (0..k).map(|i| dec.S()[i].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let u = from_faer(dec.U());
    let v = from_faer(dec.V());
    let permute = |m: &ComplexMatrix| {
        let mut out = m.clone();
        for (dst, &src) in order.iter().enumerate() {
            out.set_column(dst, &m.column(src));
        }
        out
    };
    SvdResult {
        u: permute(&u),
        singular_values: order.iter().map(|&i| values[i]).collect(),
        v: permute(&v),
    }
}

/// Singular values, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    svd(a, false).singular_values
}

/// Orthonormal basis of the right nullspace of `a`.
///
/// Singular values below `tol · σ_max` count as zero.
pub fn nullspace(a: &ComplexMatrix, tol: f64) -> Vec<ComplexVector> {
    nullspace_scaled(a, tol, 0.0)
}

/// As [`nullspace`], with the cutoff `tol · max(σ_max, scale)`.
///
/// A positive `scale` keeps a nearly-zero `a` (one that is zero up to
/// rounding) from being treated as full rank.
pub fn nullspace_scaled(a: &ComplexMatrix, tol: f64, scale: f64) -> Vec<ComplexVector> {
    let cols = a.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let dec = svd(a, true);
    let reference = dec.singular_values.iter().copied().fold(scale, f64::max);
    let cut = tol * reference;
    let nonzero = if reference == 0.0 {
        0
    } else {
        dec.singular_values.iter().filter(|&&s| s >= cut).count()
    };
    (nonzero..cols).map(|j| dec.v.column(j).into_owned()).collect()
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(a: &ComplexMatrix, tol: f64) -> usize {
    let sv = singular_values(a);
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= tol * max).count()
}

/// Row-major flattening `vec(M)_{i·n + j} = M[i, j]`.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    let (r, cols) = m.shape();
    ComplexVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

pub fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Rows of `[re, im]` pairs, the interchange layout of matrices in documents.
pub fn to_complex_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Inverse of [`to_complex_rows`]; rows must have equal lengths.
pub fn from_complex_rows(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            got: bad.len(),
        });
    }
    let m = ComplexMatrix::from_fn(n, cols, |i, j| c(rows[i][j][0], rows[i][j][1]));
    ensure_finite(&m)?;
    Ok(m)
}

#[cfg(test)]
pub(crate) mod test_util {
    pub use crate::random::{ginibre as random_matrix, random_hermitian};

    pub fn random_density(rng: &mut impl rand::Rng, n: usize) -> super::ComplexMatrix {
        crate::random::random_hs_density(rng, n)
    }
}
