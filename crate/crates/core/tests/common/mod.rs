//! Oracles shared by the integration tests; deliberately independent of the
//! library's linear-algebra routines.

#![allow(dead_code)]

use num_complex::Complex64;
use ucc_core::matrix_core::ComplexMatrix;

/// Rank by Gaussian elimination with partial pivoting.
pub fn rank(mut rows: Vec<Vec<Complex64>>, tol: f64) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..ncols {
        let Some(pivot) = (r..rows.len()).max_by(|&a, &b| rows[a][col].norm().total_cmp(&rows[b][col].norm())) else {
            break;
        };
        if rows[pivot][col].norm() <= tol {
            continue;
        }
        rows.swap(r, pivot);
        let lead = rows[r][col];
        for k in 0..rows.len() {
            if k != r {
                let f = rows[k][col] / lead;
                if f.norm() != 0.0 {
                    for j in col..ncols {
                        let v = rows[r][j];
                        rows[k][j] -= f * v;
                    }
                }
            }
        }
        r += 1;
    }
    r
}

/// Dimension of `{X : [G, X] = [G†, X] = 0 for all G}`, by writing out one
/// linear constraint per matrix entry and per generator.
pub fn brute_force_commutant_dim(generators: &[ComplexMatrix]) -> usize {
    let d = generators[0].nrows();
    let mut constraints = Vec::new();
    for g in generators {
        for g in [g.clone(), g.adjoint()] {
            // (G X − X G)_{ij} = Σ_p G_ip X_pj − Σ_q X_iq G_qj.
            for i in 0..d {
                for j in 0..d {
                    let mut row = vec![Complex64::new(0.0, 0.0); d * d];
                    for p in 0..d {
                        row[p * d + j] += g[(i, p)];
                    }
                    for q in 0..d {
                        row[i * d + q] -= g[(q, j)];
                    }
                    constraints.push(row);
                }
            }
        }
    }
    d * d - rank(constraints, 1e-10)
}

/// `⟨ψ|ρ|ψ⟩` for the code state `cos2θ|00⟩ + e^{iφ} sin2θ|11⟩`, written out by hand.
pub fn code_overlap(rho: &ComplexMatrix, theta_deg: f64, phi_deg: f64) -> f64 {
    let (t, p) = (theta_deg.to_radians(), phi_deg.to_radians());
    let a = Complex64::new((2.0 * t).cos(), 0.0);
    let b = Complex64::from_polar((2.0 * t).sin(), p);
    (a.conj() * rho[(0, 0)] * a + a.conj() * rho[(0, 3)] * b + b.conj() * rho[(3, 0)] * a + b.conj() * rho[(3, 3)] * b).re
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
