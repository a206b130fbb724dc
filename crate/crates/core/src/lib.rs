//! Workbench for passive and unitarily correctable quantum codes.
//!
//! The crate finds decoherence-free subspaces, noiseless subsystems and
//! unitarily correctable codes of unital Kraus channels, and simulates a
//! two-photon polarization experiment end to end: code-state preparation,
//! anticorrelated phase-flip noise, single-unitary recovery, photon-counting
//! tomography and maximum-likelihood reconstruction.

pub mod channels;
pub mod cli;
pub mod code_finder;
pub mod error;
pub mod experiment_sim;
pub mod matrix_core;
pub mod random;
pub mod tomography;

pub use error::{Error, Result};
