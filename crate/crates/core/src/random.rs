//! Seeded random matrices and states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix_core::{c, ComplexMatrix, ComplexVector};

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 mixing of `(seed, index)`, used to derive per-run seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Uniformly random unit vector.
pub fn random_pure_vector(rng: &mut impl Rng, dim: usize) -> ComplexVector {
    let g = ginibre(rng, dim, 1);
    let v = ComplexVector::from_fn(dim, |i, _| g[(i, 0)]);
    let n = v.norm();
    v.unscale(n)
}

/// Hilbert–Schmidt random state `GG†/Tr(GG†)`.
pub fn random_hs_density(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    let rho = &g * g.adjoint();
    let t = rho.trace();
    rho / t
}

/// Haar-random unitary via QR with the diagonal phases fixed.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let qr = ginibre(rng, dim, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    (&g + g.adjoint()).scale(0.5)
}
