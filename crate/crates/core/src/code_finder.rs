//! Commutants, their block structure, and code discovery.
//!
//! For a unital channel the operators commuting with every Kraus operator form
//! a †-algebra unitarily equivalent to `⊕_k (I_{m_k} ⊗ M_{n_k})`. Each block
//! with `n_k ≥ 2` is a noiseless subsystem carrying an `n_k`-level system in
//! the second factor (a decoherence-free subspace when `m_k = 1`). The
//! unitarily correctable codes of `E` are the noiseless subsystems of `E†∘E`,
//! and each one is paired with an explicit recovery unitary.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::matrix_core::{
    self, c, ensure_square, ensure_unitary, identity, kron, max_abs, nullspace_scaled, partial_trace,
    unvectorize, vectorize, ComplexMatrix, ComplexVector,
};
use crate::random::{self, rng_for};

/// Default relative cutoff for commutant nullspaces.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative tolerance for grouping eigenvalues of generic algebra elements.
pub const EIGEN_GROUP_TOL: f64 = 1e-7;

const CLOSURE_TOL: f64 = 1e-8;
const UNITAL_TOL: f64 = 1e-8;
const STRUCTURE_TOL: f64 = 1e-7;
const SAMPLING_ATTEMPTS: u64 = 8;

/// One simple block `I_m ⊗ M_n` of a †-algebra.
#[derive(Debug, Clone)]
pub struct AlgebraBlock {
    pub multiplicity: usize,
    pub block_dim: usize,
    /// `dim × (m·n)` isometry; column `j·n + i` is copy `j`, basis vector `i`.
    pub isometry: ComplexMatrix,
}

impl AlgebraBlock {
    pub fn projector(&self) -> ComplexMatrix {
        &self.isometry * self.isometry.adjoint()
    }
}

#[derive(Debug, Clone)]
pub struct AlgebraStructure {
    /// Hilbert–Schmidt orthonormal basis of the algebra.
    pub basis: Vec<ComplexMatrix>,
    pub blocks: Vec<AlgebraBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeKind {
    #[serde(rename = "DFS")]
    Dfs,
    #[serde(rename = "NS")]
    Ns,
    #[serde(rename = "UCC")]
    Ucc,
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeKind::Dfs => "DFS",
            CodeKind::Ns => "NS",
            CodeKind::Ucc => "UCC",
        })
    }
}

/// A code `H = (H^A ⊗ H^B) ⊕ K` found for a channel.
#[derive(Debug, Clone)]
pub struct CodeReport {
    pub kind: CodeKind,
    pub dim_a: usize,
    pub dim_b: usize,
    /// Projector onto `H^A ⊗ H^B`.
    pub code_projector: ComplexMatrix,
    /// Projector onto `K`.
    pub complement_projector: ComplexMatrix,
    /// Isometry from `C^{dim_b} ⊗ C^{dim_a}` onto the code; `B` is the left factor.
    pub frame: ComplexMatrix,
    pub recovery: Option<ComplexMatrix>,
}

impl CodeReport {
    fn from_block(block: &AlgebraBlock, kind: CodeKind) -> Self {
        let dim = block.isometry.nrows();
        let code_projector = block.projector();
        let complement_projector = identity(dim) - &code_projector;
        CodeReport {
            kind,
            dim_a: block.block_dim,
            dim_b: block.multiplicity,
            code_projector,
            complement_projector,
            frame: block.isometry.clone(),
            recovery: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.code_projector.nrows()
    }

    /// Whether two reports describe the same code space.
    pub fn same_space(&self, other: &CodeReport, tol: f64) -> bool {
        self.code_projector.shape() == other.code_projector.shape()
            && max_abs(&(&self.code_projector - &other.code_projector)) < tol
    }
}

/// `G ⊗ I − I ⊗ Gᵀ`, the matrix of `M ↦ GM − MG` on row-major `vec(M)`.
pub fn commutation_operator(g: &ComplexMatrix) -> ComplexMatrix {
    let n = g.nrows();
    kron(g, &identity(n)) - kron(&identity(n), &g.transpose())
}

/// Orthonormal basis of `{M : [G, M] = 0 for every generator G and G†}`.
pub fn commutant_basis(generators: &[ComplexMatrix], tol: f64) -> Result<Vec<ComplexMatrix>> {
    let first = generators.first().ok_or(Error::Empty)?;
    let n = ensure_square(first)?;
    for g in generators {
        let d = ensure_square(g)?;
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, got: d });
        }
    }
    let mut closed: Vec<ComplexMatrix> = Vec::with_capacity(2 * generators.len());
    for g in generators {
        closed.push(g.clone());
        if matrix_core::hermitian_deviation(g) > 0.0 {
            closed.push(g.adjoint());
        }
    }
    let n2 = n * n;
    let mut stacked = ComplexMatrix::zeros(n2 * closed.len(), n2);
    for (k, g) in closed.iter().enumerate() {
        stacked
            .view_mut((k * n2, 0), (n2, n2))
            .copy_from(&commutation_operator(g));
    }
    // ‖G ⊗ I − I ⊗ Gᵀ‖ is at most 2‖G‖, so generators that are multiples of
    // the identity up to rounding contribute nothing.
    let scale = closed.iter().map(matrix_core::frobenius).fold(0.0, f64::max);
    Ok(nullspace_scaled(&stacked, tol, scale)
        .iter()
        .map(|v| unvectorize(v, n, n))
        .collect())
}

/// Orthonormal basis (as columns of an `n² × r` matrix) of the span of `ops`.
fn span_basis(ops: &[ComplexMatrix], tol: f64) -> ComplexMatrix {
    let n = ops[0].nrows();
    let mut stacked = ComplexMatrix::zeros(n * ops[0].ncols(), ops.len());
    for (k, op) in ops.iter().enumerate() {
        stacked.set_column(k, &vectorize(op));
    }
    let dec = matrix_core::svd(&stacked, false);
    let max = dec.singular_values.first().copied().unwrap_or(0.0);
    let r = dec
        .singular_values
        .iter()
        .filter(|&&s| max > 0.0 && s >= tol * max)
        .count();
    dec.u.columns(0, r).into_owned()
}

fn projection_residual(q: &ComplexMatrix, op: &ComplexMatrix) -> f64 {
    let v = vectorize(op);
    let proj = q * (q.adjoint() * &v);
    (v - proj).norm()
}

/// Consecutive runs of sorted `values` separated by gaps above `rel_tol · scale`.
fn group_sorted(values: &[f64], rel_tol: f64) -> Vec<std::ops::Range<usize>> {
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > rel_tol * scale {
            groups.push(start..i);
            start = i;
        }
    }
    if !values.is_empty() {
        groups.push(start..values.len());
    }
    groups
}

fn generic_hermitian(ops: &[ComplexMatrix], rng: &mut impl Rng) -> ComplexMatrix {
    let n = ops[0].nrows();
    ops.iter().fold(ComplexMatrix::zeros(n, n), |acc, op| {
        let w: f64 = rng.sample(StandardNormal);
        acc + (op + op.adjoint()).scale(w)
    })
}

fn generic_element(ops: &[ComplexMatrix], rng: &mut impl Rng) -> ComplexMatrix {
    let n = ops[0].nrows();
    ops.iter().fold(ComplexMatrix::zeros(n, n), |acc, op| {
        acc + op * c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn columns(m: &ComplexMatrix, range: std::ops::Range<usize>) -> ComplexMatrix {
    m.columns(range.start, range.len()).into_owned()
}

/// Block decomposition of the †-algebra spanned by `basis`, seed 0.
pub fn algebra_structure(basis: &[ComplexMatrix], tol: f64) -> Result<AlgebraStructure> {
    algebra_structure_seeded(basis, tol, 0)
}

/// Block decomposition `⊕_k (I_{m_k} ⊗ M_{n_k})` of a †-algebra.
///
/// A generic Hermitian element of the centre splits the space into the
/// central blocks. Inside each block a generic Hermitian element of the
/// commutant separates the `m_k` copies, and a generic commutant element
/// transports the basis of the first copy onto the others.
pub fn algebra_structure_seeded(basis: &[ComplexMatrix], tol: f64, seed: u64) -> Result<AlgebraStructure> {
    let first = basis.first().ok_or(Error::Empty)?;
    let n = ensure_square(first)?;
    for b in basis {
        let d = ensure_square(b)?;
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, got: d });
        }
    }

    let q = span_basis(basis, tol);
    let ortho: Vec<ComplexMatrix> = (0..q.ncols())
        .map(|k| unvectorize(&q.column(k).into_owned(), n, n))
        .collect();
    if ortho.is_empty() {
        return Err(Error::Empty);
    }
    let mut worst: f64 = 0.0;
    for a in &ortho {
        worst = worst.max(projection_residual(&q, &a.adjoint()));
        for b in &ortho {
            worst = worst.max(projection_residual(&q, &(a * b)));
        }
    }
    if worst > CLOSURE_TOL {
        return Err(Error::NotAnAlgebra(worst));
    }

    let commutant = commutant_basis(&ortho, tol)?;
    let mut joint = ortho.clone();
    joint.extend(commutant.iter().cloned());
    let centre = commutant_basis(&joint, tol)?;

    let mut last_err = None;
    for attempt in 0..SAMPLING_ATTEMPTS {
        let mut rng = rng_for(seed, attempt);
        match decompose(&ortho, &commutant, &centre, tol, &mut rng) {
            Ok(blocks) => {
                return Ok(AlgebraStructure {
                    basis: ortho,
                    blocks,
                })
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn decompose(
    algebra: &[ComplexMatrix],
    commutant: &[ComplexMatrix],
    centre: &[ComplexMatrix],
    tol: f64,
    rng: &mut impl Rng,
) -> Result<Vec<AlgebraBlock>> {
    let z = generic_hermitian(centre, rng);
    let z_eig = matrix_core::eig_hermitian_unchecked(&z);
    let mut blocks = Vec::new();
    for group in group_sorted(&z_eig.eigenvalues, EIGEN_GROUP_TOL) {
        let sub = columns(&z_eig.eigenvectors, group);
        let d = sub.ncols();
        let restricted: Vec<ComplexMatrix> = algebra.iter().map(|a| sub.adjoint() * a * &sub).collect();
        let r = span_basis(&restricted, 1e-8).ncols();
        if r == 0 {
            // The algebra vanishes here (a non-unital algebra).
            continue;
        }
        let block_dim = (r as f64).sqrt().round() as usize;
        if block_dim * block_dim != r || d % block_dim != 0 {
            return Err(Error::NotAnAlgebra(r as f64));
        }
        let multiplicity = d / block_dim;
        let local = if multiplicity == 1 {
            identity(d)
        } else {
            align_copies(&sub, commutant, &restricted, multiplicity, block_dim, rng)?
        };
        blocks.push(AlgebraBlock {
            multiplicity,
            block_dim,
            isometry: &sub * local,
        });
    }
    let _ = tol;
    blocks.sort_by_key(|b| first_support_index(&b.projector()));
    Ok(blocks)
}

/// Local frame of a central block in which the algebra reads `I_m ⊗ M_n`.
fn align_copies(
    sub: &ComplexMatrix,
    commutant: &[ComplexMatrix],
    restricted: &[ComplexMatrix],
    m: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Result<ComplexMatrix> {
    let local_comm: Vec<ComplexMatrix> = commutant.iter().map(|b| sub.adjoint() * b * sub).collect();
    let h = generic_hermitian(&local_comm, rng);
    let eig = matrix_core::eig_hermitian_unchecked(&h);
    let groups = group_sorted(&eig.eigenvalues, EIGEN_GROUP_TOL);
    if groups.len() != m || groups.iter().any(|g| g.len() != n) {
        return Err(Error::NotAnAlgebra(groups.len() as f64));
    }
    let copies: Vec<ComplexMatrix> = groups.into_iter().map(|g| columns(&eig.eigenvectors, g)).collect();
    let transport = generic_element(&local_comm, rng);
    let d = m * n;
    let mut frame = ComplexMatrix::zeros(d, d);
    frame.view_mut((0, 0), (d, n)).copy_from(&copies[0]);
    for (j, copy) in copies.iter().enumerate().skip(1) {
        let map = copy.adjoint() * &transport * &copies[0];
        let scale = matrix_core::frobenius(&map) / (n as f64).sqrt();
        if scale < 1e-6 {
            return Err(Error::NotAnAlgebra(scale));
        }
        let aligned = copy * map.unscale(scale);
        frame.view_mut((0, j * n), (d, n)).copy_from(&aligned);
    }
    // Every copy must carry the same representation.
    let first = frame.columns(0, n).into_owned();
    for (j, _) in copies.iter().enumerate().skip(1) {
        let other = frame.columns(j * n, n).into_owned();
        for a in restricted {
            let dev = max_abs(&(other.adjoint() * a * &other - first.adjoint() * a * &first));
            if dev > STRUCTURE_TOL {
                return Err(Error::NotAnAlgebra(dev));
            }
        }
    }
    Ok(frame)
}

fn first_support_index(p: &ComplexMatrix) -> usize {
    (0..p.nrows()).find(|&i| p[(i, i)].re > 1e-6).unwrap_or(p.nrows())
}

/// Decoherence-free subspaces and noiseless subsystems of a unital channel.
pub fn find_noiseless_subsystems(e: &KrausChannel, tol: f64) -> Result<Vec<CodeReport>> {
    if !e.is_unital(UNITAL_TOL) {
        return Err(Error::NotUnital);
    }
    let basis = commutant_basis(e.kraus_ops(), tol)?;
    let structure = algebra_structure(&basis, tol)?;
    Ok(structure
        .blocks
        .iter()
        .filter(|b| b.block_dim >= 2)
        .map(|b| {
            let kind = if b.multiplicity == 1 { CodeKind::Dfs } else { CodeKind::Ns };
            CodeReport::from_block(b, kind)
        })
        .collect())
}

/// Unitarily correctable codes of a unital channel, each with a recovery.
pub fn find_ucc(e: &KrausChannel, tol: f64) -> Result<Vec<CodeReport>> {
    if !e.is_unital(UNITAL_TOL) {
        return Err(Error::NotUnital);
    }
    let composite = KrausChannel::compose(&e.dual(), e)?;
    let mut codes = find_noiseless_subsystems(&composite, tol)?;
    for code in &mut codes {
        code.kind = CodeKind::Ucc;
        code.recovery = Some(construct_recovery(e, code, tol)?);
    }
    Ok(codes)
}

/// Fixes the phase of `m` so its first largest-magnitude entry is real positive.
fn fix_phase(m: &mut ComplexMatrix) {
    let max = max_abs(m);
    if max == 0.0 {
        return;
    }
    if let Some(z) = m.iter().copied().find(|z| z.norm() > max * (1.0 - 1e-9)) {
        let phase = z.conj() / z.norm();
        *m *= phase;
    }
}

/// Extends orthonormal columns `v` to an orthonormal basis by Gram–Schmidt
/// against the computational basis.
fn complete_basis(v: &ComplexMatrix) -> ComplexMatrix {
    let d = v.nrows();
    let mut cols: Vec<ComplexVector> = (0..v.ncols()).map(|j| v.column(j).into_owned()).collect();
    for i in 0..d {
        if cols.len() == d {
            break;
        }
        let mut w = matrix_core::basis_ket(d, i);
        for _ in 0..2 {
            for u in &cols {
                let coeff = u.dotc(&w);
                w -= u * coeff;
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            cols.push(w.unscale(norm));
        }
    }
    ComplexMatrix::from_columns(&cols)
}

/// Builds a unitary `U` with `U K W = W (X ⊗ I)` for every Kraus operator `K`.
///
/// Restricted to the code, each Kraus operator acts as `V (X ⊗ I_{dim_a})` for
/// one isometry `V`; the maps `K W (e_b ⊗ ·)` therefore span at most `dim_b`
/// directions (a rank-one restricted Choi matrix when `dim_b = 1`). `U`
/// sends that span back onto the code and is completed on the complement.
pub fn construct_recovery(e: &KrausChannel, code: &CodeReport, tol: f64) -> Result<ComplexMatrix> {
    let d = e.dim();
    if code.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: code.dim(),
        });
    }
    let (m, n) = (code.dim_b, code.dim_a);
    let frame = &code.frame;
    let mut images = Vec::with_capacity(e.kraus_ops().len() * m);
    for k in e.kraus_ops() {
        for b in 0..m {
            images.push(k * frame.columns(b * n, n));
        }
    }
    let span = span_basis(&images, tol.max(1e-12));
    let rank = span.ncols();
    if rank > m {
        return Err(Error::NotCorrectable(format!(
            "restricted Choi rank {rank} exceeds {m}"
        )));
    }
    let sqrt_n = (n as f64).sqrt();
    let mut isometries: Vec<ComplexMatrix> = (0..rank)
        .map(|k| unvectorize(&span.column(k).into_owned(), d, n).scale(sqrt_n))
        .collect();
    for s in &mut isometries {
        fix_phase(s);
    }
    for (k, a) in isometries.iter().enumerate() {
        for (l, b) in isometries.iter().enumerate() {
            let want = if k == l { identity(n) } else { ComplexMatrix::zeros(n, n) };
            let dev = max_abs(&(a.adjoint() * b - want));
            if dev > STRUCTURE_TOL {
                return Err(Error::NotCorrectable(format!(
                    "channel images are not orthogonal isometries (deviation {dev:.3e})"
                )));
            }
        }
    }
    let source = if isometries.is_empty() {
        ComplexMatrix::zeros(d, 0)
    } else {
        let cols: Vec<ComplexVector> = isometries
            .iter()
            .flat_map(|s| (0..n).map(move |i| s.column(i).into_owned()))
            .collect();
        ComplexMatrix::from_columns(&cols)
    };
    let target = frame.columns(0, rank * n).into_owned();
    let source_full = complete_basis(&source);
    let target_full = complete_basis(&target);
    let u = target_full * source_full.adjoint();
    ensure_unitary(&u, 1e-9)?;
    Ok(u)
}

/// Outcome of a recovery check over sampled code states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub passed: bool,
    pub worst_deviation: f64,
    pub trials: usize,
}

/// Checks `U ∘ E ∘ P_AB(ρ^A ⊗ σ^B) = P_AB(ρ^A ⊗ τ^B)` on random inputs, seed 0.
pub fn verify_correction(
    e: &KrausChannel,
    u: &ComplexMatrix,
    code: &CodeReport,
    trials: usize,
    tol: f64,
) -> Result<Verification> {
    verify_correction_seeded(e, u, code, trials, tol, 0)
}

/// As [`verify_correction`]; trial `t` draws from stream `t` of `seed`.
///
/// Even trials use pure `ρ^A`, odd trials Hilbert–Schmidt mixed states.
pub fn verify_correction_seeded(
    e: &KrausChannel,
    u: &ComplexMatrix,
    code: &CodeReport,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<Verification> {
    let d = e.dim();
    if u.shape() != (d, d) || code.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: u.nrows().max(code.dim()),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    ensure_unitary(u, 1e-10)?;
    let (m, n) = (code.dim_b, code.dim_a);
    let w = &code.frame;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let rho_a = if t % 2 == 0 {
            matrix_core::outer(&random::random_pure_vector(&mut rng, n))
        } else {
            random::random_hs_density(&mut rng, n)
        };
        let sigma_b = if m > 1 {
            random::random_hs_density(&mut rng, m)
        } else {
            identity(1)
        };
        let input = w * kron(&sigma_b, &rho_a) * w.adjoint();
        let out = u * e.apply_operator(&input)? * u.adjoint();
        let framed = w.adjoint() * &out * w;
        let leakage = max_abs(&(&out - w * &framed * w.adjoint()));
        let tau = partial_trace(&framed, &[m, n], &[0])?;
        let mismatch = max_abs(&(&framed - kron(&tau, &rho_a)));
        worst = worst.max(leakage).max(mismatch);
    }
    Ok(Verification {
        passed: worst <= tol,
        worst_deviation: worst,
        trials,
    })
}
