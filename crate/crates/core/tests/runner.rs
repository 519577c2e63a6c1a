use std::fs;
use std::path::Path;

use openqmap::runner::{run, validate, ExperimentConfig, RunOptions};

fn run_in(dir: &Path, text: &str) -> openqmap::runner::RunManifest {
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.to_path_buf()),
        ..Default::default()
    };
    run(&cfg, &opts).unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const NUMEROLOGY: &str = r#"
kind = "numerology"
[numerology]
lambda0 = 0.6931471805599453
lambda1 = 0.6931471805599453
beta = 1.0
h = [0.001]
"#;

#[test]
fn numerology_profile_for_unit_beta() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(dir.path(), NUMEROLOGY);
    let v = read_json(&dir.path().join("numerology_profile.json"));
    assert!((v["frak_b"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["delta0"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v["tau"].as_f64().unwrap() - 0.875).abs() < 1e-12);
    assert_eq!(v["all_hold"], true);
    assert_eq!(v["config_hash"], m.config_hash.as_str());
    assert!(m.outputs.contains(&"numerology_times.csv".to_string()));
}

const FUP: &str = r#"
kind = "fup"
[sweep]
k = [3, 4, 5, 6, 7]
[fup]
base = 3
minus = { kind = "cantor", base = 3, alphabet = [0, 2], depth = 0 }
plus = { kind = "cantor", base = 3, alphabet = [0, 2], depth = 0 }
"#;

#[test]
fn fup_cantor_csv_has_fit() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(dir.path(), FUP);
    let mut rdr = csv::Reader::from_path(dir.path().join("fup_fup.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "config_hash");
    let beta_col = headers.iter().position(|h| h == "beta").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(&r[0], m.config_hash.as_str());
        assert!(r[beta_col].parse::<f64>().unwrap() > 0.01);
    }
}

#[test]
fn identical_configs_give_identical_csvs() {
    let text = r#"
kind = "classical"
seed = 11
[system]
type = "baker"
base = 3
kept = [0, 2]
[sweep]
depth = 5
samples = 20000
n_max = 8
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_in(a.path(), text);
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let mb = run(
        &cfg,
        &RunOptions {
            out_dir: Some(b.path().to_path_buf()),
            workers: Some(2),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    for name in ma.outputs.iter().filter(|n| n.ends_with(".csv")) {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn seed_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(NUMEROLOGY).unwrap();
    let m1 = run(&cfg, &RunOptions { out_dir: Some(dir.path().into()), ..Default::default() }).unwrap();
    let m2 = run(
        &cfg,
        &RunOptions {
            out_dir: Some(dir.path().into()),
            seed: Some(5),
            ..Default::default()
        },
    )
    .unwrap();
    assert_ne!(m1.config_hash, m2.config_hash);
    assert_eq!(m2.seed, 5);
}

#[test]
fn closed_baker_pressure_warns_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(
        dir.path(),
        r#"
kind = "pressure"
[system]
type = "baker"
base = 3
kept = [0, 1, 2]
[sweep]
n_max = 6
s = [0.0, 1.0]
"#,
    );
    assert!(m.warnings.iter().any(|w| w.contains("(Fractal) fails")));
}

#[test]
fn open_baker_pressure_root() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        r#"
kind = "pressure"
[system]
type = "baker"
base = 3
kept = [0, 2]
[sweep]
n_max = 8
s = [0.0, 0.5, 1.0]
"#,
    );
    let v = read_json(&dir.path().join("pressure_summary.json"));
    let root = v["bowen_root"]["delta"].as_f64().unwrap();
    assert!((root - 2f64.ln() / 3f64.ln()).abs() < 1e-3);
    let gamma = v["classical_decay_rate"].as_f64().unwrap();
    assert!((gamma - 1.5f64.ln()).abs() < 1e-3);
}

#[test]
fn baker_spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        r#"
kind = "spectrum"
[system]
type = "baker"
base = 3
kept = [0, 2]
[sweep]
k = [3, 4]
powers = [1, 2]
"#,
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("spectrum_spectrum.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let rho: f64 = r[4].parse().unwrap();
        assert!(rho < 1.0);
    }
}

#[test]
fn porosity_and_dimension_runs() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        r#"
kind = "porosity"
[sweep]
scales = [0.0002, 1.0]
[porosity]
nu = 0.3333333333333333
scale_ratio = 3.0
set = { kind = "cantor", base = 3, alphabet = [0, 2], depth = 8 }
"#,
    );
    let v = read_json(&dir.path().join("porosity_outcome.json"));
    assert_eq!(v["outcome"], "certified");
    run_in(
        dir.path(),
        r#"
kind = "dimension"
[system]
type = "baker"
base = 3
kept = [0, 2]
[sweep]
depth = 10
scales = [0.0001, 0.1]
"#,
    );
    let v = read_json(&dir.path().join("dimension_summary.json"));
    let d = v["box_count"]["delta"].as_f64().unwrap();
    assert!((d - 2f64.ln() / 3f64.ln()).abs() < 0.03, "{d}");
}

#[test]
fn splitting_run_on_cat_map() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(
        dir.path(),
        r#"
kind = "splitting"
[system]
type = "cat"
matrix = [[2, 1], [1, 1]]
[sweep]
grid = 16
[splitting]
frames = "power_iteration"
[tolerance]
slope = 1e-8
max_iter = 80
"#,
    );
    assert!(m.outputs.contains(&"splitting_slope.csv".to_string()));
}

#[test]
fn invalid_configs_are_rejected_with_keys() {
    let cfg = ExperimentConfig::from_toml("kind = \"spectrum\"\n[system]\ntype = \"cat\"\nmatrix = [[2, 1], [1, 1]]\n").unwrap();
    let d = validate(&cfg);
    assert!(d.errors.iter().any(|(k, _)| k == "system.type"));
    let err = run(&cfg, &RunOptions::default()).unwrap_err();
    assert!(err.is_validation());
}
