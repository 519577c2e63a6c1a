use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_openqmap"))
}

#[test]
fn list_prints_all_kinds() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    for k in ["classical", "splitting", "pressure", "dimension", "porosity", "spectrum", "fup", "numerology"] {
        assert!(text.contains(k), "{k} missing");
    }
}

#[test]
fn numerology_subcommand_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("n.toml");
    fs::write(&cfg, "[numerology]\nlambda0 = 0.6931471805599453\nlambda1 = 0.6931471805599453\nbeta = 1.0\n").unwrap();
    let out = bin()
        .args(["numerology", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .args(["--seed", "4", "--workers", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("numerology_profile.json")).unwrap()).unwrap();
    assert_eq!(v["tau"], 0.875);
    assert_eq!(v["seed"], 4);
}

#[test]
fn validation_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "kind = \"fup\"\n[sweep]\nk = []\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.k"));
    let out = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kind_mismatch_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("n.toml");
    fs::write(&cfg, "kind = \"numerology\"\n[numerology]\nlambda0 = 1.0\nlambda1 = 1.0\nbeta = 1.0\n").unwrap();
    let out = bin().args(["fup", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    // The canonical frame violates eta-bunching for the cat map.
    fs::write(
        &cfg,
        "kind = \"splitting\"\n[system]\ntype = \"cat\"\nmatrix = [[2, 1], [1, 1]]\n[sweep]\ngrid = 8\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn closed_baker_pressure_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    fs::write(
        &cfg,
        "[system]\ntype = \"baker\"\nbase = 3\nkept = [0, 1, 2]\n[sweep]\nn_max = 5\ns = [0.0, 1.0]\n",
    )
    .unwrap();
    let out = bin()
        .args(["pressure", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("(Fractal) fails"));
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stdout));
        seen += 1;
    }
    assert!(seen >= 8);
}
