use std::path::PathBuf;
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rigidity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidity")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn matrix(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn normalize_detects_relator() {
    let m = matrix("bs2.txt");
    let o = rigidity(&["--matrix", &m, "group", "normalize", "a", "b1", "a^-1", "b1^-2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "identity"), "{out}");
    assert!(out.contains("word: (empty)"));

    let o = rigidity(&["--matrix", &m, "group", "normalize", "b1", "a"]);
    assert!(stdout(&o).lines().any(|l| l == "nontrivial"));
}

#[test]
fn empty_word_is_identity() {
    let o = rigidity(&["--matrix", &matrix("abc23.txt"), "group", "normalize"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "identity"));
}

#[test]
fn conjugation_power_row() {
    // Row 1 of [[2,3],[4,5]]^2 = [[16,21],[28,37]].
    let o = rigidity(&["--matrix", &matrix("abc23.txt"), "group", "conj-power", "--i", "1", "--k", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "b1^16 b2^21");
}

#[test]
fn constants_json() {
    let o = rigidity(&["--matrix", &matrix("bs2.txt"), "constants"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["k"], 1);
    assert_eq!(v["N"], 3);
    assert_eq!(v["C_k"], 4.5);
    assert_eq!(v["eta"], 0.0125);
    assert_eq!(v["theta_u"], 1.5);

    let o = rigidity(&["--matrix", &matrix("abc23.txt"), "constants"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["N"], 10);
}

#[test]
fn constants_overrides_are_tagged() {
    let o = rigidity(&["--matrix", &matrix("bs2.txt"), "constants", "--eps0", "0.001"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["eps0"]["provenance"], "user_supplied");
    assert!(v["eps"].as_f64().unwrap() <= 0.001);
}

#[test]
fn rotation_is_bad_input() {
    let o = rigidity(&["--matrix", &matrix("rotation.txt"), "constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("has_unit_modulus"));
}

#[test]
fn malformed_matrix_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.txt");
    std::fs::write(&p, "2\n1 2\n").unwrap();
    let o = rigidity(&["--matrix", p.to_str().unwrap(), "spectral"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rigidity(&["--matrix", &matrix("bs2.txt"), "--delta", "-1", "spectral"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let cases = [
        ("trivial_circle.json", 0, "displacements_zero"),
        ("affine.json", 0, "hypothesis_violated"),
        ("broken_fixture.json", 1, "expansion_detected"),
    ];
    for (cfg, code, verdict) in cases {
        let c = configs().join(cfg);
        let o = rigidity(&["--grid", "256", "verify", "--config", c.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(code), "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(&format!("verdict: {verdict}")), "{cfg}: {}", stdout(&o));
    }
}

#[test]
fn map_leaving_interval_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    let cfg = r#"{"matrix": [[2]], "family": {"kind": "trivial_perturbed",
        "manifold": {"kind": "interval", "lo": 0.0, "hi": 1.0},
        "f": {"type": "trig", "amp": 0.001, "freq": 1, "phase": 1.0}}}"#;
    std::fs::write(&p, cfg).unwrap();
    let o = rigidity(&["verify", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_writes_outputs_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let c = configs().join("affine.json");
    let o = rigidity(&[
        "--grid", "64", "--seed", "7", "--out", dir.path().to_str().unwrap(),
        "verify", "--config", c.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for name in ["audit.csv", "sweep.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        for key in ["# tool:", "# matrix_sha256:", "# constants_sha256:", "# grid: 64", "# seed: 7"] {
            assert!(text.contains(key), "{name} lacks {key}");
        }
    }
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let first = sweep.lines().find(|l| l.starts_with(|c: char| c.is_ascii_digit())).unwrap();
    assert_eq!(first.split(',').nth(2), Some("1"), "columns are one-based");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["metadata"]["seed"], 7);
    assert_eq!(summary["exit_code"], 0);
    assert_eq!(summary["sweep"]["verdict"], "hypothesis_violated");
}
