//! Seeded Monte-Carlo checks of the reconstruction, with the simulator as
//! the oracle.

mod common;

use ucc_core::channels::DensityMatrix;
use ucc_core::experiment_sim::{prep_code_state, simulate_counts, AcquisitionConfig, AcquisitionMode, PrepParams};
use ucc_core::random::{derive_seed, random_hs_density, rng_for};
use ucc_core::tomography::metrics::fidelity;
use ucc_core::tomography::{mle_reconstruct, MleOptions};

fn poisson(seed: u64, per_setting: f64) -> AcquisitionConfig {
    AcquisitionConfig {
        mode: AcquisitionMode::Poisson,
        seed,
        pair_rate: per_setting / 5.0,
        duration: 5.0,
        ..AcquisitionConfig::default()
    }
}

#[test]
fn bell_state_reconstructions_at_bench_rates() {
    let phi_plus = prep_code_state(&PrepParams::pure(22.5, 0.0)).unwrap();
    let good = (0..100)
        .filter(|&s| {
            let rec = simulate_counts(&phi_plus, &poisson(derive_seed(31, s), 60_000.0)).unwrap();
            let est = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
            fidelity(&est.state, &phi_plus).unwrap() >= 0.995
        })
        .count();
    assert!(good >= 95, "{good} of 100");
}

#[test]
fn infidelity_shrinks_with_counts() {
    let states: Vec<DensityMatrix> = (0..12)
        .map(|k| DensityMatrix::new(random_hs_density(&mut rng_for(44, k), 4)).unwrap())
        .collect();
    let median_at = |n: f64| {
        common::median(
            states
                .iter()
                .enumerate()
                .map(|(k, rho)| {
                    let rec = simulate_counts(rho, &poisson(derive_seed(n as u64, k as u64), n)).unwrap();
                    1.0 - fidelity(&mle_reconstruct(&rec, &MleOptions::default()).unwrap().state, rho).unwrap()
                })
                .collect(),
        )
    };
    let m: Vec<f64> = [300.0, 3000.0, 30_000.0].into_iter().map(median_at).collect();
    assert!(m[0] > m[1] && m[1] > m[2], "{m:?}");
}

#[test]
fn exact_counts_of_pure_code_states() {
    for theta in [0.0, 10.0, 22.5, 35.5] {
        let rho = prep_code_state(&PrepParams::pure(theta, 46.5)).unwrap();
        let rec = simulate_counts(&rho, &AcquisitionConfig::default()).unwrap();
        let est = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        let f = fidelity(&est.state, &rho).unwrap();
        assert!(f >= 1.0 - 1e-6, "θ = {theta}: {f}");
    }
}
