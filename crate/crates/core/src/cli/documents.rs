//! Documents read and written by the command-line tool.
//!
//! JSON documents carry a top-level `schema_version`; the sweep table is CSV
//! with its metadata in leading `# key: value` comment lines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::{DensityMatrix, KrausChannel};
use crate::code_finder::{CodeKind, CodeReport, Verification};
use crate::experiment_sim::{AcquisitionConfig, AcquisitionMode, PrepParams};
use crate::matrix_core::{from_complex_rows, to_complex_rows, ComplexMatrix};
use crate::tomography::metrics::{NearestCodeState, StateMetrics};
use crate::tomography::Convergence;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const BUILTIN_ANTICORRELATED: &str = "anticorrelated-phase-flip";
pub const BUILTIN_IDENTITY: &str = "identity";

/// Matrix as rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn check_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema_version {found}")));
    }
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("document serializes")
}

/// Channel specification file.
///
/// Either a named builtin, or `dim` plus Kraus operators given as row-major
/// rows of `[re, im]` pairs:
///
/// ```json
/// { "schema_version": 1, "dim": 2,
///   "kraus": [ [[[0.7071, 0], [0, 0]], [[0, 0], [0.7071, 0]]],
///              [[[0.7071, 0], [0, 0]], [[0, 0], [-0.7071, 0]]] ] }
/// ```
///
/// The `identity` builtin requires `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kraus: Vec<MatrixRows>,
}

impl ChannelSpec {
    pub fn builtin(name: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            builtin: Some(name.to_owned()),
            dim: None,
            kraus: Vec::new(),
        }
    }

    pub fn from_channel(e: &KrausChannel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            builtin: None,
            dim: Some(e.dim()),
            kraus: e.kraus_ops().iter().map(to_complex_rows).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = parse_json(text)?;
        check_version(spec.schema_version)?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    /// Short identifier echoed in reports.
    pub fn id(&self) -> String {
        match (&self.builtin, self.dim) {
            (Some(name), Some(d)) if name == BUILTIN_IDENTITY => format!("{name}:{d}"),
            (Some(name), _) => name.clone(),
            (None, d) => format!("custom:dim={},kraus={}", d.unwrap_or(0), self.kraus.len()),
        }
    }

    /// Builds and validates the channel. Shape problems are parse errors;
    /// a non-trace-preserving operator set is a validation error.
    pub fn to_channel(&self) -> Result<KrausChannel> {
        match self.builtin.as_deref() {
            Some(BUILTIN_ANTICORRELATED) => {
                if !self.kraus.is_empty() || self.dim.is_some_and(|d| d != 4) {
                    return Err(Error::Parse(format!("builtin `{BUILTIN_ANTICORRELATED}` takes no operators and has dim 4")));
                }
                Ok(KrausChannel::anticorrelated_phase_flip())
            }
            Some(BUILTIN_IDENTITY) => match self.dim {
                Some(d) if d > 0 && self.kraus.is_empty() => Ok(KrausChannel::identity(d)),
                _ => Err(Error::Parse("builtin `identity` needs a positive dim and no operators".into())),
            },
            Some(other) => Err(Error::Parse(format!("unknown builtin `{other}`"))),
            None => {
                let dim = self.dim.ok_or_else(|| Error::Parse("missing `dim`".into()))?;
                if self.kraus.is_empty() {
                    return Err(Error::Parse("missing `kraus`".into()));
                }
                let ops = self
                    .kraus
                    .iter()
                    .enumerate()
                    .map(|(k, rows)| {
                        let m = from_complex_rows(rows).map_err(|e| Error::Parse(format!("kraus[{k}]: {e}")))?;
                        if m.shape() != (dim, dim) {
                            return Err(Error::Parse(format!(
                                "kraus[{k}] is {}x{}, expected {dim}x{dim}",
                                m.nrows(),
                                m.ncols()
                            )));
                        }
                        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                            return Err(Error::Parse(format!("kraus[{k}] has non-finite entries")));
                        }
                        Ok(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                KrausChannel::new(ops)
            }
        }
    }
}

/// Whether a named candidate recovery satisfies the correction condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCheck {
    pub name: String,
    pub passed: bool,
    pub worst_deviation: f64,
}

impl CandidateCheck {
    pub fn new(name: &str, v: &Verification) -> Self {
        Self {
            name: name.to_owned(),
            passed: v.passed,
            worst_deviation: v.worst_deviation,
        }
    }
}

/// Serializable form of a [`CodeReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeEntry {
    pub kind: CodeKind,
    pub dim_a: usize,
    pub dim_b: usize,
    pub code_projector: MatrixRows,
    pub complement_projector: MatrixRows,
    pub frame: MatrixRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateCheck>,
}

impl CodeEntry {
    pub fn from_report(code: &CodeReport, candidates: Vec<CandidateCheck>) -> Self {
        Self {
            kind: code.kind,
            dim_a: code.dim_a,
            dim_b: code.dim_b,
            code_projector: to_complex_rows(&code.code_projector),
            complement_projector: to_complex_rows(&code.complement_projector),
            frame: to_complex_rows(&code.frame),
            recovery: code.recovery.as_ref().map(to_complex_rows),
            candidates,
        }
    }

    pub fn projector(&self) -> Result<ComplexMatrix> {
        from_complex_rows(&self.code_projector)
    }

    /// `span{|00⟩, |11⟩}`-style label when the projector is diagonal in the
    /// computational basis, otherwise its rank.
    pub fn support_label(&self) -> String {
        let Ok(p) = self.projector() else {
            return "?".into();
        };
        let d = p.nrows();
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || p[(i, j)].norm() < 1e-9));
        let rank = p.trace().re.round() as usize;
        if !diagonal {
            return format!("rank-{rank} subspace");
        }
        let bits = d.trailing_zeros() as usize;
        let kets: Vec<String> = (0..d)
            .filter(|&i| p[(i, i)].re > 0.5)
            .map(|i| {
                if d.is_power_of_two() && bits > 0 {
                    format!("|{:0width$b}⟩", i, width = bits)
                } else {
                    format!("|{i}⟩")
                }
            })
            .collect();
        format!("span{{{}}}", kets.join(", "))
    }
}

/// Output of `discover`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryDocument {
    pub schema_version: u32,
    pub channel: String,
    pub dim: usize,
    pub tol: f64,
    /// Decoherence-free subspaces and noiseless subsystems of the channel.
    pub noiseless: Vec<CodeEntry>,
    /// Unitarily correctable codes.
    pub ucc: Vec<CodeEntry>,
}

impl DiscoveryDocument {
    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = parse_json(text)?;
        check_version(doc.schema_version)?;
        Ok(doc)
    }

    pub fn summary(&self) -> String {
        let list = |codes: &[CodeEntry]| {
            if codes.is_empty() {
                "none".to_owned()
            } else {
                (1..=codes.len()).map(|k| format!("C{k}")).collect::<Vec<_>>().join(", ")
            }
        };
        let mut out = format!(
            "channel {} (dim {})\nDFS/NS: {}; UCC: {}\n",
            self.channel,
            self.dim,
            list(&self.noiseless),
            list(&self.ucc)
        );
        for (k, c) in self.noiseless.iter().enumerate() {
            out += &format!(
                "  {} C{}: dim_A={} dim_B={} {}\n",
                c.kind,
                k + 1,
                c.dim_a,
                c.dim_b,
                c.support_label()
            );
        }
        for (k, c) in self.ucc.iter().enumerate() {
            out += &format!(
                "  UCC C{}: dim_A={} dim_B={} {}\n",
                k + 1,
                c.dim_a,
                c.dim_b,
                c.support_label()
            );
            if let Some(r) = &c.recovery {
                out += "    recovery:\n";
                for row in r {
                    let cells: Vec<String> = row.iter().map(|[re, im]| format!("{re:+.4}{im:+.4}i")).collect();
                    out += &format!("      [{}]\n", cells.join(" "));
                }
            }
            if !c.candidates.is_empty() {
                let checks: Vec<String> = c
                    .candidates
                    .iter()
                    .map(|ch| format!("{} {}", ch.name, if ch.passed { "verifies" } else { "fails" }))
                    .collect();
                out += &format!("    candidates: {}\n", checks.join("; "));
            }
        }
        out
    }
}

/// Configuration echoed by a run; re-running it reproduces the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub prep: PrepParams,
    pub acquisition: AcquisitionConfig,
    pub channel: String,
    pub recovery: String,
}

/// One of the three measured stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub density_matrix: MatrixRows,
    /// Metrics; the reference is the pure target state.
    pub metrics: StateMetrics,
    pub nearest_code_state: NearestCodeState,
    /// Present when the state was reconstructed from counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
}

impl StageReport {
    pub fn state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(from_complex_rows(&self.density_matrix)?)
    }
}

/// Output of `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub initial: StageReport,
    pub noisy: StageReport,
    pub corrected: StageReport,
    pub fidelity_noisy_vs_initial: f64,
    pub fidelity_corrected_vs_initial: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = parse_json(text)?;
        check_version(r.schema_version)?;
        Ok(r)
    }

    pub fn summary(&self) -> String {
        let p = &self.config.prep;
        let mut out = format!(
            "theta={}° phi={}° mixing={} mode={}\n",
            p.theta_deg, p.phi_deg, p.mixing, self.config.acquisition.mode
        );
        for (name, s) in [("initial", &self.initial), ("noisy", &self.noisy), ("corrected", &self.corrected)] {
            out += &format!(
                "  {name:<9} F_target={:.6} tangle={:.4} S_L={:.4} V_HV={:.4} V_DA={:.4} nearest=({:.2}°, {:.2}°)\n",
                s.metrics.fidelity_to_reference.unwrap_or(f64::NAN),
                s.metrics.tangle,
                s.metrics.linear_entropy,
                s.metrics.visibility_hv,
                s.metrics.visibility_da,
                s.nearest_code_state.theta_deg,
                s.nearest_code_state.phi_deg,
            );
        }
        out += &format!(
            "F(noisy, initial) = {:.6}\nF(corrected, initial) = {:.6}\n",
            self.fidelity_noisy_vs_initial, self.fidelity_corrected_vs_initial
        );
        for w in &self.warnings {
            out += &format!("warning: {w}\n");
        }
        out
    }
}

/// Parameters shared by every row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMeta {
    pub mode: AcquisitionMode,
    pub phi_deg: f64,
    pub mixing: f64,
    pub seed: u64,
    pub pair_rate: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta_deg: f64,
    pub f_noisy: f64,
    pub f_corrected: f64,
    /// `cos²(4θ)`.
    pub theory: f64,
}

/// Output of `sweep`, one row per θ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub meta: SweepMeta,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = format!(
            "# schema_version: {SCHEMA_VERSION}\n# mode: {}\n# phi_deg: {}\n# mixing: {}\n# seed: {}\n# pair_rate: {}\n# duration: {}\n",
            m.mode, m.phi_deg, m.mixing, m.seed, m.pair_rate, m.duration
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize");
        }
        out += &String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let (k, v) = line[1..]
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad metadata line `{line}`")))?;
            fields.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::Parse(format!("missing metadata `{k}`")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad `{k}`"))) };
        let version: u32 = get("schema_version")?
            .parse()
            .map_err(|_| Error::Parse("bad schema_version".into()))?;
        check_version(version)?;
        let meta = SweepMeta {
            mode: get("mode")?.parse()?,
            phi_deg: num("phi_deg")?,
            mixing: num("mixing")?,
            seed: get("seed")?.parse().map_err(|_| Error::Parse("bad `seed`".into()))?,
            pair_rate: num("pair_rate")?,
            duration: num("duration")?,
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRow>, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        if rows.is_empty() {
            return Err(Error::Parse("sweep table has no rows".into()));
        }
        Ok(Self { meta, rows })
    }
}

/// Reference for `tomo`: an explicit density matrix (any document with a
/// `density_matrix` field, including a state report) or preparation
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceSpec {
    Matrix {
        schema_version: u32,
        density_matrix: MatrixRows,
    },
    Prep {
        schema_version: u32,
        prep: PrepParams,
    },
}

impl ReferenceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = parse_json(text)?;
        let (Self::Matrix { schema_version, .. } | Self::Prep { schema_version, .. }) = &r;
        check_version(*schema_version)?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        match self {
            Self::Matrix { density_matrix, .. } => DensityMatrix::new(from_complex_rows(density_matrix)?),
            Self::Prep { prep, .. } => crate::experiment_sim::prep_code_state(prep),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_spec_round_trips() {
        let spec = ChannelSpec::from_channel(&KrausChannel::anticorrelated_phase_flip());
        assert_eq!(ChannelSpec::from_json(&spec.to_json()).unwrap(), spec);
        let b = ChannelSpec::builtin(BUILTIN_ANTICORRELATED);
        assert_eq!(ChannelSpec::from_json(&b.to_json()).unwrap(), b);
        assert_eq!(b.to_channel().unwrap(), KrausChannel::anticorrelated_phase_flip());
    }

    #[test]
    fn malformed_specs_are_parse_errors() {
        for text in [
            "{",
            r#"{"schema_version": 2, "builtin": "identity", "dim": 2}"#,
            r#"{"schema_version": 1, "builtin": "nope"}"#,
            r#"{"schema_version": 1, "dim": 2}"#,
            r#"{"schema_version": 1, "dim": 2, "kraus": [[[[1,0]]]]}"#,
            r#"{"schema_version": 1, "dim": 1, "kraus": [[[[1,0]]]], "extra": 0}"#,
        ] {
            let r = ChannelSpec::from_json(text).and_then(|s| s.to_channel());
            assert!(matches!(r, Err(Error::Parse(_))), "{text}: {r:?}");
        }
        let not_tp = r#"{"schema_version": 1, "dim": 1, "kraus": [[[[2,0]]]]}"#;
        let r = ChannelSpec::from_json(not_tp).unwrap().to_channel();
        assert!(matches!(r, Err(Error::NotTracePreserving(_))), "{r:?}");
    }

    #[test]
    fn sweep_table_round_trips() {
        let t = SweepTable {
            meta: SweepMeta {
                mode: AcquisitionMode::Poisson,
                phi_deg: 0.1,
                mixing: 0.047,
                seed: 7,
                pair_rate: 12_000.0,
                duration: 5.0,
            },
            rows: vec![
                SweepRow { theta_deg: 0.0, f_noisy: 1.0, f_corrected: 0.999_999_999_1, theory: 1.0 },
                SweepRow { theta_deg: 2.5, f_noisy: 0.1 + 0.2, f_corrected: 1.0 / 3.0, theory: 0.9045 },
            ],
        };
        assert_eq!(SweepTable::from_csv(&t.to_csv()).unwrap(), t);
        assert!(SweepTable::from_csv("# schema_version: 1\ntheta_deg\n").is_err());
    }

    #[test]
    fn reference_specs_parse_both_forms() {
        let prep = ReferenceSpec::Prep {
            schema_version: 1,
            prep: PrepParams::pure(22.5, 0.0),
        };
        assert_eq!(ReferenceSpec::from_json(&prep.to_json()).unwrap(), prep);
        let m = ReferenceSpec::Matrix {
            schema_version: 1,
            density_matrix: to_complex_rows(DensityMatrix::maximally_mixed(4).matrix()),
        };
        assert_eq!(ReferenceSpec::from_json(&m.to_json()).unwrap(), m);
        assert_eq!(m.state().unwrap(), DensityMatrix::maximally_mixed(4));
    }
}
