//! Tests of the `ucc` binary: documents, exit statuses, reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ucc_core::channels::{DensityMatrix, KrausChannel};
use ucc_core::cli::documents::{ChannelSpec, DiscoveryDocument, ReferenceSpec, RunReport, SweepTable};
use ucc_core::cli::{EXIT_IO, EXIT_NON_UNITAL, EXIT_PARSE, EXIT_USAGE, EXIT_VALIDATION};
use ucc_core::code_finder::CodeKind;
use ucc_core::experiment_sim::{measurement_settings, AcquisitionConfig, PrepParams, TomographyRecord};
use ucc_core::matrix_core::{c, identity, max_abs, to_complex_rows, ComplexMatrix};
use ucc_core::tomography::StateReport;

fn ucc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn status(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_spec(dir: &Path, name: &str, e: &KrausChannel) -> String {
    let path = dir.join(name);
    fs::write(&path, ChannelSpec::from_channel(e).to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn discover_the_builtin_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("codes.json");
    let o = ucc(&["discover", "--builtin", "anticorrelated-phase-flip", "--out", path_str(&out)]);
    assert_eq!(status(&o), 0, "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("DFS/NS: none; UCC: C1, C2"), "{text}");
    assert!(text.contains("span{|00⟩, |11⟩}") && text.contains("span{|01⟩, |10⟩}"));
    let written = fs::read_to_string(&out).unwrap();
    let doc = DiscoveryDocument::from_json(&written).unwrap();
    assert_eq!(doc.to_json(), written);
    assert_eq!(doc.ucc.len(), 2);
    for code in &doc.ucc {
        let names: Vec<&str> = code.candidates.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["Z1", "Z2", "CZ"]);
        assert!(code.recovery.is_some());
    }
}

#[test]
fn discover_identity_and_dephasing_specs() {
    let dir = tempfile::tempdir().unwrap();
    let id = write_spec(dir.path(), "id.json", &KrausChannel::identity(4));
    let o = ucc(&["discover", &id, "--json"]);
    assert_eq!(status(&o), 0);
    let doc = DiscoveryDocument::from_json(&stdout(&o)).unwrap();
    assert_eq!(doc.noiseless.len(), 1);
    assert_eq!((doc.noiseless[0].kind, doc.noiseless[0].dim_a), (CodeKind::Dfs, 4));

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = identity(2).scale(s);
    z[(1, 1)] = c(-s, 0.0);
    let deph = write_spec(dir.path(), "deph.json", &KrausChannel::new(vec![identity(2).scale(s), z]).unwrap());
    let doc = DiscoveryDocument::from_json(&stdout(&ucc(&["discover", &deph, "--json"]))).unwrap();
    assert_eq!(doc.noiseless, doc.ucc);
}

#[test]
fn exit_statuses_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    fs::write(&bad_json, "{ not json").unwrap();
    let not_tp = dir.path().join("nottp.json");
    fs::write(&not_tp, r#"{"schema_version": 1, "dim": 1, "kraus": [[[[2, 0]]]]}"#).unwrap();
    let g: f64 = 0.3;
    let mut k0 = identity(2);
    k0[(1, 1)] = c((1.0 - g).sqrt(), 0.0);
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1[(0, 1)] = c(g.sqrt(), 0.0);
    let damping = write_spec(dir.path(), "damp.json", &KrausChannel::new(vec![k0, k1]).unwrap());

    let cases: [(Vec<&str>, u8); 6] = [
        (vec!["discover", path_str(&bad_json)], EXIT_PARSE),
        (vec!["discover", path_str(&not_tp)], EXIT_VALIDATION),
        (vec!["discover", &damping], EXIT_NON_UNITAL),
        (vec!["discover", "/nonexistent/spec.json"], EXIT_IO),
        (vec!["discover", "--builtin", "mystery"], EXIT_PARSE),
        (vec!["run", "--theta", "10", "--mixing", "1.5"], EXIT_VALIDATION),
    ];
    for (args, code) in cases {
        assert_eq!(status(&ucc(&args)), code as i32, "{args:?}");
    }
    assert_eq!(status(&ucc(&["run"])), EXIT_USAGE as i32);
    assert_eq!(status(&ucc(&["frobnicate"])), EXIT_USAGE as i32);
    assert_eq!(status(&ucc(&["run", "--theta", "1", "--mixing", "0.1", "--da-visibility", "0.9"])), EXIT_USAGE as i32);
    let codes = [EXIT_IO, EXIT_USAGE, EXIT_PARSE, EXIT_VALIDATION, EXIT_NON_UNITAL];
    assert!(codes.iter().all(|&c| c != 0) && codes.windows(2).all(|w| w[0] != w[1]));
}

#[test]
fn run_reports_the_fidelity_law_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let o = ucc(&["run", "--theta", "22.5", "--out", path_str(&out)]);
    assert_eq!(status(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let r = RunReport::from_json(&text).unwrap();
    assert_eq!(r.to_json(), text);
    assert!(r.fidelity_noisy_vs_initial.abs() < 1e-12);
    assert!((r.fidelity_corrected_vs_initial - 1.0).abs() < 1e-12);
    assert_eq!(r.config.prep, PrepParams::pure(22.5, 0.0));

    let r0 = RunReport::from_json(&stdout(&ucc(&["run", "--theta", "0", "--json"]))).unwrap();
    assert!((r0.fidelity_noisy_vs_initial - 1.0).abs() < 1e-12);
    assert!((r0.fidelity_corrected_vs_initial - 1.0).abs() < 1e-12);
}

#[test]
fn runs_are_bit_reproducible() {
    for mode in ["exact", "poisson"] {
        let args = ["run", "--theta", "35.5", "--phi", "46.5", "--target-fidelity", "0.98", "--mode", mode, "--seed", "9", "--json"];
        let a = ucc(&args);
        let b = ucc(&args);
        assert_eq!(status(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{mode}");
    }
    let s1 = ucc(&["run", "--theta", "10", "--mode", "poisson", "--seed", "1", "--json"]);
    let s2 = ucc(&["run", "--theta", "10", "--mode", "poisson", "--seed", "2", "--json"]);
    assert_ne!(s1.stdout, s2.stdout);
}

#[test]
fn poisson_run_at_the_noise_and_restore_settings() {
    let o = ucc(&["run", "--theta", "35.5", "--phi", "46.5", "--target-fidelity", "0.98", "--mode", "poisson", "--json"]);
    let r = RunReport::from_json(&stdout(&o)).unwrap();
    assert!((r.fidelity_noisy_vs_initial - 0.62).abs() <= 0.05, "{}", r.fidelity_noisy_vs_initial);
    assert!(r.fidelity_corrected_vs_initial >= 0.95);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
}

#[test]
fn sweep_table_in_exact_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = ucc(&["sweep", "--theta-step", "5", "--out", path_str(&out)]);
    assert_eq!(status(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let t = SweepTable::from_csv(&text).unwrap();
    assert_eq!(t.to_csv(), text);
    assert_eq!(t.rows.len(), 19);
    for r in &t.rows {
        assert!((r.f_noisy - (4.0 * r.theta_deg.to_radians()).cos().powi(2)).abs() < 1e-12);
        assert!((r.f_corrected - 1.0).abs() < 1e-12);
    }
    let default = SweepTable::from_csv(&stdout(&ucc(&["sweep"]))).unwrap();
    assert_eq!(default.rows.len(), 37);
    let listed = SweepTable::from_csv(&stdout(&ucc(&["sweep", "--thetas", "0,22.5,45"]))).unwrap();
    assert_eq!(listed.rows.iter().map(|r| r.theta_deg).collect::<Vec<_>>(), [0.0, 22.5, 45.0]);
    assert_eq!(status(&ucc(&["sweep", "--out", "/nonexistent/dir/t.csv"])), EXIT_IO as i32);
}

#[test]
fn poisson_sweep_at_bench_rates_restores_fidelity() {
    let o = ucc(&["sweep", "--mode", "poisson", "--da-visibility", "0.953", "--seed", "4"]);
    let t = SweepTable::from_csv(&stdout(&o)).unwrap();
    assert!(t.rows.iter().all(|r| r.f_corrected >= 0.97));
}

fn write_record(dir: &Path, name: &str, rec: &TomographyRecord) -> String {
    let p = dir.join(name);
    fs::write(&p, rec.to_json()).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn tomo_on_saved_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records");
    let o = ucc(&[
        "run", "--theta", "35.5", "--phi", "46.5", "--target-fidelity", "0.98", "--mode", "poisson",
        "--save-records", path_str(&records),
    ]);
    assert_eq!(status(&o), 0);
    let o = ucc(&["tomo", path_str(&records.join("initial.json")), "--json"]);
    assert_eq!(status(&o), 0);
    let report = StateReport::from_json(&stdout(&o)).unwrap();
    assert!((report.nearest_code_state.theta_deg - 35.5).abs() < 1.0, "{:?}", report.nearest_code_state);
    assert!((report.nearest_code_state.phi_deg - 46.5).abs() < 2.0, "{:?}", report.nearest_code_state);

    // The φ⁺ record with the φ⁺ reference.
    let bell = dir.path().join("bell");
    assert_eq!(status(&ucc(&["run", "--theta", "22.5", "--save-records", path_str(&bell)])), 0);
    let reference = dir.path().join("ref.json");
    let spec = ReferenceSpec::Prep { schema_version: 1, prep: PrepParams::pure(22.5, 0.0) };
    fs::write(&reference, spec.to_json()).unwrap();
    let out = dir.path().join("state.json");
    let o = ucc(&[
        "tomo", path_str(&bell.join("initial.json")), "--reference", path_str(&reference), "--out", path_str(&out),
    ]);
    assert_eq!(status(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let report = StateReport::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
    assert!(report.metrics.fidelity_to_reference.unwrap() >= 1.0 - 1e-6);
    assert!(stdout(&o).contains("fidelity to reference"));
}

#[test]
fn tomo_on_uniform_and_broken_records() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = TomographyRecord::new(measurement_settings(), vec![1000; 36], AcquisitionConfig::default()).unwrap();
    let path = write_record(dir.path(), "uniform.json", &uniform);
    let mixed = dir.path().join("mixed.json");
    let m = ReferenceSpec::Matrix {
        schema_version: 1,
        density_matrix: to_complex_rows(DensityMatrix::maximally_mixed(4).matrix()),
    };
    fs::write(&mixed, m.to_json()).unwrap();
    let o = ucc(&["tomo", &path, "--reference", path_str(&mixed), "--json"]);
    let report = StateReport::from_json(&stdout(&o)).unwrap();
    let rho = report.state().unwrap();
    assert!(max_abs(&(rho.matrix() - DensityMatrix::maximally_mixed(4).matrix())) < 1e-6);
    assert!(report.metrics.fidelity_to_reference.unwrap() > 1.0 - 1e-9);

    let partial = TomographyRecord::new(
        measurement_settings()[..35].to_vec(),
        vec![1000; 35],
        AcquisitionConfig::default(),
    )
    .unwrap();
    let partial = write_record(dir.path(), "partial.json", &partial);
    assert_eq!(status(&ucc(&["tomo", &partial])), EXIT_VALIDATION as i32);
    let broken = dir.path().join("broken.json");
    fs::write(&broken, r#"{"schema_version": 1, "settings": ["HH"]}"#).unwrap();
    assert_eq!(status(&ucc(&["tomo", path_str(&broken)])), EXIT_PARSE as i32);
}
