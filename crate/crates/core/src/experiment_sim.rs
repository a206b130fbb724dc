//! Simulated two-photon polarization bench.
//!
//! A pumped source prepares `cos2θ|HH⟩ + sin2θ e^{iφ}|VV⟩` (optionally mixed
//! with white noise), two retarders fire at random to apply `Z₁` or `Z₂`, a
//! half-wave plate on photon 2 undoes the damage, and coincidence counts are
//! generated for the 36 overcomplete tomography settings.
//!
//! Circular polarizations are fixed as `R = (|H⟩ − i|V⟩)/√2` and
//! `L = (|H⟩ + i|V⟩)/√2`; the reconstruction uses the same projectors, so
//! results do not depend on this choice end to end.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channels::{z1, z2, DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::matrix_core::{c, kron, outer, ComplexMatrix, ComplexVector, ONE, ZERO};
use crate::random::rng_for;

pub const SCHEMA_VERSION: u32 = 1;

/// Source settings; angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepParams {
    pub theta_deg: f64,
    pub phi_deg: f64,
    /// Weight of `I/4` in the prepared state.
    pub mixing: f64,
}

impl PrepParams {
    pub fn pure(theta_deg: f64, phi_deg: f64) -> Self {
        Self {
            theta_deg,
            phi_deg,
            mixing: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_deg.is_finite() || !self.phi_deg.is_finite() {
            return Err(Error::InvalidParameter("angles must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::InvalidParameter(format!(
                "mixing must lie in [0, 1], got {}",
                self.mixing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionMode {
    /// Counts are the rounded expectation values.
    Exact,
    /// Counts are Poisson samples around the expectation values.
    Poisson,
}

impl fmt::Display for AcquisitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AcquisitionMode::Exact => "exact",
            AcquisitionMode::Poisson => "poisson",
        })
    }
}

impl FromStr for AcquisitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(AcquisitionMode::Exact),
            "poisson" => Ok(AcquisitionMode::Poisson),
            other => Err(Error::Parse(format!("unknown acquisition mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Coincidence rate in counts per second.
    pub pair_rate: f64,
    /// Integration time per setting in seconds.
    pub duration: f64,
    pub seed: u64,
    pub mode: AcquisitionMode,
    /// Singles rate per detector; recorded only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singles_rate: Option<f64>,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            pair_rate: 12_000.0,
            duration: 5.0,
            seed: 0,
            mode: AcquisitionMode::Exact,
            singles_rate: Some(60_000.0),
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate > 0.0 && self.pair_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pair rate must be positive, got {}",
                self.pair_rate
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    /// Expected number of pairs reaching the analyzers per setting.
    pub fn pairs_per_setting(&self) -> f64 {
        self.pair_rate * self.duration
    }
}

/// Single-photon analyzer states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn ket(self) -> ComplexVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (h, v) = match self {
            Polarization::H => (ONE, ZERO),
            Polarization::V => (ZERO, ONE),
            Polarization::D => (c(s, 0.0), c(s, 0.0)),
            Polarization::A => (c(s, 0.0), c(-s, 0.0)),
            Polarization::R => (c(s, 0.0), c(0.0, -s)),
            Polarization::L => (c(s, 0.0), c(0.0, s)),
        };
        ComplexVector::from_vec(vec![h, v])
    }

    pub fn symbol(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::D => 'D',
            Polarization::A => 'A',
            Polarization::R => 'R',
            Polarization::L => 'L',
        }
    }

    pub fn from_symbol(ch: char) -> Result<Self> {
        Polarization::ALL
            .into_iter()
            .find(|p| p.symbol() == ch)
            .ok_or_else(|| Error::Parse(format!("unknown polarization `{ch}`")))
    }
}

/// A two-photon projector `|a⟩⟨a| ⊗ |b⟩⟨b|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Setting {
    pub photon1: Polarization,
    pub photon2: Polarization,
}

impl Setting {
    pub fn new(photon1: Polarization, photon2: Polarization) -> Self {
        Self { photon1, photon2 }
    }

    pub fn ket(&self) -> ComplexVector {
        let k = kron(
            &ComplexMatrix::from_column_slice(2, 1, self.photon1.ket().as_slice()),
            &ComplexMatrix::from_column_slice(2, 1, self.photon2.ket().as_slice()),
        );
        ComplexVector::from_column_slice(k.as_slice())
    }

    pub fn projector(&self) -> ComplexMatrix {
        outer(&self.ket())
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.photon1.symbol(), self.photon2.symbol())
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(Setting::new(
                Polarization::from_symbol(a)?,
                Polarization::from_symbol(b)?,
            )),
            _ => Err(Error::Parse(format!("malformed setting label `{s}`"))),
        }
    }
}

/// The 36 settings, photon 1 in the outer loop, each in H,V,D,A,R,L order.
pub fn measurement_settings() -> Vec<Setting> {
    Polarization::ALL
        .into_iter()
        .flat_map(|a| Polarization::ALL.into_iter().map(move |b| Setting::new(a, b)))
        .collect()
}

/// Coincidence counts for a list of settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    settings: Vec<Setting>,
    counts: Vec<u64>,
    config: AcquisitionConfig,
}

#[derive(Serialize, Deserialize)]
struct RecordDocument {
    schema_version: u32,
    settings: Vec<String>,
    counts: Vec<u64>,
    pair_rate: f64,
    duration: f64,
    seed: u64,
    mode: AcquisitionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    singles_rate: Option<f64>,
}

impl TomographyRecord {
    /// Validates lengths, distinctness and the acquisition config.
    ///
    /// Subsets of the 36 settings are accepted here; reconstruction decides
    /// whether they determine the state.
    pub fn new(settings: Vec<Setting>, counts: Vec<u64>, config: AcquisitionConfig) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::Empty);
        }
        if settings.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: settings.len(),
                got: counts.len(),
            });
        }
        for (i, s) in settings.iter().enumerate() {
            if settings[..i].contains(s) {
                return Err(Error::Parse(format!("duplicate setting {s}")));
            }
        }
        config.validate()?;
        Ok(Self {
            settings,
            counts,
            config,
        })
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn config(&self) -> &AcquisitionConfig {
        &self.config
    }

    /// True iff the record holds exactly the 36 settings in canonical order.
    pub fn is_complete(&self) -> bool {
        self.settings == measurement_settings()
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "record must hold the 36 settings in canonical order, found {}",
                self.settings.len()
            )))
        }
    }

    pub fn count_for(&self, setting: Setting) -> Option<u64> {
        self.settings
            .iter()
            .position(|s| *s == setting)
            .map(|i| self.counts[i])
    }

    pub fn to_json(&self) -> String {
        let doc = RecordDocument {
            schema_version: SCHEMA_VERSION,
            settings: self.settings.iter().map(Setting::label).collect(),
            counts: self.counts.clone(),
            pair_rate: self.config.pair_rate,
            duration: self.config.duration,
            seed: self.config.seed,
            mode: self.config.mode,
            singles_rate: self.config.singles_rate,
        };
        serde_json::to_string_pretty(&doc).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RecordDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        let settings = doc
            .settings
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Setting>>>()?;
        let config = AcquisitionConfig {
            pair_rate: doc.pair_rate,
            duration: doc.duration,
            seed: doc.seed,
            mode: doc.mode,
            singles_rate: doc.singles_rate,
        };
        Self::new(settings, doc.counts, config)
    }
}

/// `cos2θ|HH⟩ + sin2θ e^{iφ}|VV⟩`, angles in degrees.
pub fn code_state_vector(theta_deg: f64, phi_deg: f64) -> ComplexVector {
    let t = 2.0 * theta_deg.to_radians();
    let phase = num_complex::Complex64::from_polar(1.0, phi_deg.to_radians());
    ComplexVector::from_vec(vec![c(t.cos(), 0.0), ZERO, ZERO, phase * t.sin()])
}

/// `(1 − mixing)|ψ⟩⟨ψ| + mixing·I/4`.
pub fn prep_code_state(p: &PrepParams) -> Result<DensityMatrix> {
    p.validate()?;
    let pure = DensityMatrix::from_pure(&code_state_vector(p.theta_deg, p.phi_deg))?;
    if p.mixing == 0.0 {
        return Ok(pure);
    }
    pure.mix(&DensityMatrix::maximally_mixed(4), p.mixing)
}

/// Mixing that reduces the D/A (or H/V) visibility of `|φ⁺⟩` to `v`.
///
/// White noise of weight `m` scales both contrasts of `|φ⁺⟩` by `1 − m`.
pub fn mixing_for_bell_visibility(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("visibility must lie in [0, 1], got {v}")));
    }
    Ok(1.0 - v)
}

/// Mixing that gives fidelity `f` between the prepared state and its pure
/// target: `F = (1 − m) + m/4`.
pub fn mixing_for_target_fidelity(f: f64) -> Result<f64> {
    if !(0.25..=1.0).contains(&f) {
        return Err(Error::InvalidParameter(format!(
            "target fidelity must lie in [1/4, 1], got {f}"
        )));
    }
    Ok((1.0 - f) / 0.75)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveplateKind {
    Half,
    Quarter,
}

impl WaveplateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WaveplateKind::Half => std::f64::consts::PI,
            WaveplateKind::Quarter => std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Jones matrix `R(a)·diag(1, e^{iδ})·R(−a)` of a retarder with its fast
/// axis at `angle_deg` from horizontal.
pub fn waveplate_jones(kind: WaveplateKind, angle_deg: f64) -> ComplexMatrix {
    let a = angle_deg.to_radians();
    let (s, co) = a.sin_cos();
    let rot = |sign: f64| ComplexMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-sign * s, 0.0), c(sign * s, 0.0), c(co, 0.0)]);
    let retard = ComplexMatrix::from_row_slice(
        2,
        2,
        &[ONE, ZERO, ZERO, num_complex::Complex64::from_polar(1.0, kind.retardance())],
    );
    rot(1.0) * retard * rot(-1.0)
}

/// The anticorrelated phase-flip channel averaged over retarder firings.
pub fn noise_exact(rho: &DensityMatrix) -> Result<DensityMatrix> {
    KrausChannel::anticorrelated_phase_flip().apply(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiredRetarder {
    Z1,
    Z2,
}

/// One firing: `Z₁ρZ₁` or `Z₂ρZ₂`, each with probability ½.
pub fn noise_event(rng: &mut impl Rng, rho: &DensityMatrix) -> Result<(DensityMatrix, FiredRetarder)> {
    ensure_two_qubit(rho)?;
    let (which, z) = if rng.random_bool(0.5) {
        (FiredRetarder::Z1, z1())
    } else {
        (FiredRetarder::Z2, z2())
    };
    Ok((DensityMatrix::from_valid_unchecked(&z * rho.matrix() * &z), which))
}

/// The half-wave plate on photon 2: `Z₂ρZ₂`.
pub fn apply_correction(rho: &DensityMatrix) -> Result<DensityMatrix> {
    ensure_two_qubit(rho)?;
    let z = z2();
    Ok(DensityMatrix::from_valid_unchecked(&z * rho.matrix() * &z))
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

/// `Tr(ρ Π_s)`, clamped to `[0, 1]` against rounding.
pub fn setting_probability(rho: &DensityMatrix, setting: Setting) -> f64 {
    let psi = setting.ket();
    let p = psi.dotc(&(rho.matrix() * &psi)).re;
    p.clamp(0.0, 1.0)
}

/// Counts for all 36 settings; Poisson draws come from stream 0 of `cfg.seed`.
pub fn simulate_counts(rho: &DensityMatrix, cfg: &AcquisitionConfig) -> Result<TomographyRecord> {
    let mut rng = rng_for(cfg.seed, 0);
    simulate_counts_with(&mut rng, rho, cfg)
}

/// As [`simulate_counts`], drawing from a caller-owned stream.
pub fn simulate_counts_with(
    rng: &mut impl Rng,
    rho: &DensityMatrix,
    cfg: &AcquisitionConfig,
) -> Result<TomographyRecord> {
    ensure_two_qubit(rho)?;
    cfg.validate()?;
    let settings = measurement_settings();
    let n = cfg.pairs_per_setting();
    let counts = settings
        .iter()
        .map(|&s| {
            let mu = n * setting_probability(rho, s);
            match cfg.mode {
                AcquisitionMode::Exact => mu.round() as u64,
                AcquisitionMode::Poisson => sample_poisson(rng, mu),
            }
        })
        .collect();
    TomographyRecord::new(settings, counts, *cfg)
}

fn sample_poisson(rng: &mut impl Rng, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mu).expect("positive finite mean");
    dist.sample(rng) as u64
}
