//! Maximum-likelihood reconstruction over `ρ(t) = T†T / Tr(T†T)`.
//!
//! `T` is lower triangular with a real diagonal; its 16 real parameters are
//! the four diagonal entries followed by the real and imaginary parts of the
//! entries below it, row by row. Every `t` with `T ≠ 0` gives a valid state,
//! so the likelihood is maximised without constraints.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsOptions};
use super::{clip_to_state, linear_inversion_with, setting_totals, Normalization};
use crate::channels::DensityMatrix;
use crate::error::{Error, Result};
use crate::experiment_sim::TomographyRecord;
use crate::matrix_core::{ComplexMatrix, ZERO};
use crate::random::rng_for;

/// Positions `(row, col)` of the complex entries of `T`, in parameter order.
const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

/// Weight of `I/4` mixed into the first start; a zero row of `T` is a
/// stationary direction, so a rank-deficient seed could never gain rank.
const SEED_REGULARIZATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    /// `Σ n ln μ − μ`, reported relative to the saturated value `Σ n ln n − n`.
    Poisson,
    /// `−Σ (n − μ)² / (2 max(n, 1))`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub likelihood: Likelihood,
    pub normalization: Normalization,
    pub max_evals: usize,
    pub grad_tol: f64,
    /// Optimised starts: regularised seed, maximally mixed, then random.
    pub starts: usize,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            likelihood: Likelihood::Poisson,
            normalization: Normalization::FromConfig,
            max_evals: 10_000,
            grad_tol: 1e-8,
            starts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub state: DensityMatrix,
    pub log_likelihood: f64,
    /// Iterations and evaluations of the winning start; evaluations summed over all starts.
    pub iterations: usize,
    pub evaluations: usize,
    /// Gradient norm of the scaled negative log-likelihood at the result.
    pub grad_norm: f64,
    pub converged: bool,
    pub warning: Option<String>,
}

/// The 16 real parameters of `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TParameterization {
    pub t: [f64; 16],
}

impl TParameterization {
    pub fn lower_triangular(&self) -> Matrix4<Complex64> {
        t_matrix(&self.t)
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        let t = self.lower_triangular();
        let m = t.adjoint() * t;
        let tau = m.trace().re;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter("T must be nonzero".into()));
        }
        let rho = ComplexMatrix::from_fn(4, 4, |i, j| m[(i, j)] / tau);
        DensityMatrix::new(rho)
    }

    /// Parameters with `T†T = ρ`, via a Cholesky factorisation that tolerates
    /// zero pivots.
    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: rho.dim(),
            });
        }
        // With J the exchange matrix, JρJ = LL† gives T = J L† J lower triangular.
        let m = rho.matrix();
        let s = Matrix4::from_fn(|i, j| m[(3 - i, 3 - j)]);
        let mut l = Matrix4::<Complex64>::zeros();
        for j in 0..4 {
            let mut d = s[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 1e-14 {
                continue;
            }
            let pivot = d.sqrt();
            l[(j, j)] = Complex64::new(pivot, 0.0);
            for i in j + 1..4 {
                let mut v = s[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = v / pivot;
            }
        }
        let lt = l.adjoint();
        let t = Matrix4::from_fn(|i, j| lt[(3 - i, 3 - j)]);
        let mut p = [0.0; 16];
        for i in 0..4 {
            p[i] = t[(i, i)].re;
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            p[4 + 2 * k] = t[(r, c)].re;
            p[5 + 2 * k] = t[(r, c)].im;
        }
        Ok(Self { t: p })
    }
}

fn t_matrix(t: &[f64]) -> Matrix4<Complex64> {
    let mut m = Matrix4::from_element(ZERO);
    for i in 0..4 {
        m[(i, i)] = Complex64::new(t[i], 0.0);
    }
    for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
        m[(r, c)] = Complex64::new(t[4 + 2 * k], t[5 + 2 * k]);
    }
    m
}

/// Negative log-likelihood in the `t` coordinates, divided by the total count.
pub(crate) struct Objective {
    kets: Vec<Vector4<Complex64>>,
    counts: Vec<f64>,
    totals: Vec<f64>,
    likelihood: Likelihood,
    scale: f64,
}

impl Objective {
    pub(crate) fn new(rec: &TomographyRecord, likelihood: Likelihood, normalization: Normalization) -> Result<Self> {
        let totals = setting_totals(rec, normalization)?;
        let kets = rec
            .settings()
            .iter()
            .map(|s| {
                let k = s.ket();
                Vector4::new(k[0], k[1], k[2], k[3])
            })
            .collect();
        let counts: Vec<f64> = rec.counts().iter().map(|&n| n as f64).collect();
        let scale = counts.iter().sum::<f64>().max(1.0);
        Ok(Self {
            kets,
            counts,
            totals,
            likelihood,
            scale,
        })
    }

    /// Log-likelihood of a state, up to count-only constants.
    pub(crate) fn log_likelihood(&self, rho: &ComplexMatrix) -> f64 {
        let r = Matrix4::from_fn(|i, j| rho[(i, j)]);
        let probs: Vec<f64> = self.kets.iter().map(|k| k.dotc(&(r * k)).re).collect();
        self.log_likelihood_of(&probs)
    }

    fn log_likelihood_of(&self, probs: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((&p, &n), &big_n) in probs.iter().zip(&self.counts).zip(&self.totals) {
            let mu = big_n * p;
            total += match self.likelihood {
                // Shifted by the count-only Σ (n ln n − n) so that terms
                // vanish where μ = n; this keeps rounding far below the
                // decrease the line search has to resolve near the optimum.
                Likelihood::Poisson => {
                    if n > 0.0 {
                        if mu <= 0.0 {
                            return f64::NEG_INFINITY;
                        }
                        n * (mu / n).ln() - (mu - n)
                    } else {
                        -mu
                    }
                }
                Likelihood::Gaussian => -(n - mu).powi(2) / (2.0 * n.max(1.0)),
            };
        }
        total
    }

    /// Scaled negative log-likelihood and its gradient in `t`.
    pub(crate) fn evaluate(&self, t: &[f64], grad: &mut [f64]) -> f64 {
        let tm = t_matrix(t);
        let tau: f64 = tm.iter().map(|z| z.norm_sqr()).sum();
        if !(tau > 0.0) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::INFINITY;
        }
        let probs: Vec<f64> = self
            .kets
            .iter()
            .map(|k| (tm * k).norm_squared() / tau)
            .collect();
        let ll = self.log_likelihood_of(&probs);
        if !ll.is_finite() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::INFINITY;
        }
        // dL = Tr(G dρ) with G = Σ w_s Π_s.
        let weights: Vec<f64> = probs
            .iter()
            .zip(&self.counts)
            .zip(&self.totals)
            .map(|((&p, &n), &big_n)| match self.likelihood {
                Likelihood::Poisson => {
                    if n > 0.0 {
                        n / p - big_n
                    } else {
                        -big_n
                    }
                }
                Likelihood::Gaussian => big_n * (n - big_n * p) / n.max(1.0),
            })
            .collect();
        let mut g = Matrix4::<Complex64>::zeros();
        let mut g_rho = 0.0;
        for ((k, &w), &p) in self.kets.iter().zip(&weights).zip(&probs) {
            g += (k * k.adjoint()).scale(w);
            g_rho += w * p;
        }
        for i in 0..4 {
            g[(i, i)] -= Complex64::new(g_rho, 0.0);
        }
        // ∂L/∂T_ij = (2/τ)(G − Tr(Gρ)) T† at (j, i).
        let m = g * tm.adjoint();
        let f = -2.0 / (tau * self.scale);
        for i in 0..4 {
            grad[i] = f * m[(i, i)].re;
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            grad[4 + 2 * k] = f * m[(c, r)].re;
            grad[5 + 2 * k] = -f * m[(c, r)].im;
        }
        -ll / self.scale
    }
}

/// Log-likelihood of `rho` given the record, up to count-only constants.
pub fn log_likelihood(rec: &TomographyRecord, rho: &DensityMatrix, opts: &MleOptions) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    Ok(Objective::new(rec, opts.likelihood, opts.normalization)?.log_likelihood(rho.matrix()))
}

/// Maximum-likelihood state for a record.
///
/// The eigenvalue-clipped linear-inversion estimate is itself a candidate, so
/// the result never has lower likelihood than it.
pub fn mle_reconstruct(rec: &TomographyRecord, opts: &MleOptions) -> Result<MleResult> {
    if opts.starts == 0 {
        return Err(Error::InvalidParameter("at least one start is required".into()));
    }
    let objective = Objective::new(rec, opts.likelihood, opts.normalization)?;
    let seed_state = clip_to_state(&linear_inversion_with(rec, opts.normalization)?);
    let lbfgs_opts = LbfgsOptions {
        max_evals: opts.max_evals,
        grad_tol: opts.grad_tol,
        ..LbfgsOptions::default()
    };

    let mut rng = rng_for(opts.seed, 0);
    let mut starts: Vec<[f64; 16]> = Vec::with_capacity(opts.starts);
    for k in 0..opts.starts {
        let t = match k {
            0 => {
                let reg = seed_state.mix(&DensityMatrix::maximally_mixed(4), SEED_REGULARIZATION)?;
                TParameterization::from_state(&reg)?.t
            }
            1 => TParameterization::from_state(&DensityMatrix::maximally_mixed(4))?.t,
            _ => std::array::from_fn(|_| StandardNormal.sample(&mut rng)),
        };
        starts.push(t);
    }

    let seed_t = TParameterization::from_state(&seed_state)?.t;
    let mut grad = [0.0; 16];
    let seed_value = objective.evaluate(&seed_t, &mut grad);
    let mut best = lbfgs::LbfgsResult {
        x: seed_t.to_vec(),
        value: seed_value,
        grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        iterations: 0,
        evaluations: 1,
        converged: false,
    };
    let mut evaluations = 1;
    for t0 in &starts {
        let r = lbfgs::minimize(|t, g| objective.evaluate(t, g), t0, &lbfgs_opts);
        evaluations += r.evaluations;
        if r.value < best.value || !best.value.is_finite() {
            best = r;
        }
    }
    if !best.value.is_finite() {
        return Err(Error::InvalidParameter(
            "no state is compatible with the recorded counts".into(),
        ));
    }
    let state = TParameterization {
        t: best.x.clone().try_into().expect("16 parameters"),
    }
    .to_state()?;
    let converged = best.grad_norm < opts.grad_tol;
    let warning = (!converged).then(|| {
        format!(
            "maximum-likelihood search stopped before convergence (gradient norm {:.3e})",
            best.grad_norm
        )
    });
    Ok(MleResult {
        state,
        log_likelihood: -best.value * objective.scale,
        iterations: best.iterations,
        evaluations,
        grad_norm: best.grad_norm,
        converged,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment_sim::{simulate_counts, AcquisitionConfig, AcquisitionMode};
    use crate::matrix_core::max_abs;
    use crate::random::random_hs_density;
    use crate::tomography::fidelity;

    fn random_state(seed: u64) -> DensityMatrix {
        DensityMatrix::new(random_hs_density(&mut rng_for(seed, 0), 4)).unwrap()
    }

    #[test]
    fn parameterization_round_trips_full_and_deficient_states() {
        for seed in 0..5 {
            let rho = random_state(seed);
            let t = TParameterization::from_state(&rho).unwrap();
            assert!(max_abs(&(t.to_state().unwrap().matrix() - rho.matrix())) < 1e-12);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::from_pure(&crate::matrix_core::ComplexVector::from_vec(vec![
            Complex64::new(s, 0.0),
            ZERO,
            ZERO,
            Complex64::new(0.0, s),
        ]))
        .unwrap();
        let t = TParameterization::from_state(&bell).unwrap();
        assert!(max_abs(&(t.to_state().unwrap().matrix() - bell.matrix())) < 1e-12);
        let tm = t.lower_triangular();
        assert!((0..4).all(|i| (i + 1..4).all(|j| tm[(i, j)] == ZERO)));
    }

    #[test]
    fn any_nonzero_parameters_give_a_state() {
        let mut rng = rng_for(9, 0);
        for _ in 0..20 {
            let t: [f64; 16] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let rho = TParameterization { t }.to_state().unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        }
        assert!(TParameterization { t: [0.0; 16] }.to_state().is_err());
    }

    fn check_gradient(likelihood: Likelihood) {
        let rho = random_state(11);
        let cfg = AcquisitionConfig {
            mode: AcquisitionMode::Poisson,
            pair_rate: 100.0,
            duration: 1.0,
            ..AcquisitionConfig::default()
        };
        let rec = simulate_counts(&rho, &cfg).unwrap();
        let obj = Objective::new(&rec, likelihood, Normalization::FromConfig).unwrap();
        let mut rng = rng_for(12, 0);
        let t: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut g = vec![0.0; 16];
        obj.evaluate(&t, &mut g);
        let h = 1e-6;
        let mut scratch = vec![0.0; 16];
        for i in 0..16 {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[i] += h;
            tm[i] -= h;
            let fd = (obj.evaluate(&tp, &mut scratch) - obj.evaluate(&tm, &mut scratch)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        check_gradient(Likelihood::Poisson);
        check_gradient(Likelihood::Gaussian);
    }

    #[test]
    fn exact_counts_are_reconstructed() {
        let cfg = AcquisitionConfig::default();
        for seed in 0..3 {
            let rho = random_state(20 + seed);
            let rec = simulate_counts(&rho, &cfg).unwrap();
            let r = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
            assert!(r.converged, "{r:?}");
            assert!(fidelity(&r.state, &rho).unwrap() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn likelihood_is_not_below_the_seed() {
        let cfg = AcquisitionConfig {
            mode: AcquisitionMode::Poisson,
            pair_rate: 50.0,
            duration: 1.0,
            ..AcquisitionConfig::default()
        };
        let opts = MleOptions::default();
        for seed in 0..5 {
            let rec = simulate_counts(&random_state(30 + seed), &AcquisitionConfig { seed, ..cfg }).unwrap();
            let r = mle_reconstruct(&rec, &opts).unwrap();
            let seed_state = clip_to_state(&crate::tomography::linear_inversion(&rec).unwrap());
            assert!(r.log_likelihood >= log_likelihood(&rec, &seed_state, &opts).unwrap() - 1e-9);
        }
    }

    #[test]
    fn zero_counts_are_handled() {
        let settings = crate::experiment_sim::measurement_settings();
        let mut counts = vec![100u64; 36];
        counts[0] = 0;
        let rec = TomographyRecord::new(settings, counts, AcquisitionConfig {
            pair_rate: 400.0,
            duration: 1.0,
            ..AcquisitionConfig::default()
        })
        .unwrap();
        let r = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        assert!(r.log_likelihood.is_finite());
        assert!((r.state.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_and_poisson_agree_at_high_counts() {
        let rho = random_state(40);
        let cfg = AcquisitionConfig {
            mode: AcquisitionMode::Poisson,
            seed: 3,
            ..AcquisitionConfig::default()
        };
        let rec = simulate_counts(&rho, &cfg).unwrap();
        let p = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        let g = mle_reconstruct(&rec, &MleOptions {
            likelihood: Likelihood::Gaussian,
            ..MleOptions::default()
        })
        .unwrap();
        assert!(fidelity(&p.state, &g.state).unwrap() > 1.0 - 1e-4);
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let rec = simulate_counts(&random_state(50), &AcquisitionConfig {
            mode: AcquisitionMode::Poisson,
            ..AcquisitionConfig::default()
        })
        .unwrap();
        let a = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        let b = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.log_likelihood.to_bits(), b.log_likelihood.to_bits());
    }

    #[test]
    fn an_exhausted_budget_is_reported() {
        let rec = simulate_counts(&random_state(60), &AcquisitionConfig {
            mode: AcquisitionMode::Poisson,
            ..AcquisitionConfig::default()
        })
        .unwrap();
        let r = mle_reconstruct(&rec, &MleOptions {
            max_evals: 3,
            ..MleOptions::default()
        })
        .unwrap();
        assert!(!r.converged);
        assert!(r.warning.is_some());
    }
}
