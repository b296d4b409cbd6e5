use std::process::Command;

use serde_json::Value;

fn lavgap(args: &[&str], out: &std::path::Path) -> (i32, Value) {
    let o = Command::new(env!("CARGO_BIN_EXE_lavgap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    let text = std::fs::read_to_string(out.join(format!("{}.json", args[0]))).unwrap_or_default();
    (
        o.status.code().unwrap(),
        serde_json::from_str(&text).unwrap_or(Value::Null),
    )
}

#[test]
fn regimes_reports_first_no_gap_range() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = lavgap(
        &[
            "regimes", "--n", "2", "--p", "2", "--q", "3", "--kappa", "1",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdict"], "NoGap-I");
    assert_eq!(r["config"]["q"], 3.0);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn cone_weight_is_stable_at_its_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = lavgap(
        &["weight-check", "--weight", "cone", "--kappa", "1.5"],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(r["result"]["membership"]["verdict"], "stable");
    assert!(dir.path().join("weight-check_constants.svg").exists());
}

#[test]
fn gap_hypothesis_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = lavgap(
        &[
            "gap-demo", "--n", "2", "--p", "1.5", "--q", "4", "--kappa", "3",
        ],
        dir.path(),
    );
    assert_eq!(code, 1);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "precondition");
    assert_eq!(r["config"]["kappa"], 3.0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lavgap(&["regimes", "--no-such-flag"], dir.path()).0, 1);
    assert_eq!(lavgap(&["regimes", "--p", "abc"], dir.path()).0, 1);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 2, "p": 1.5, "q": 4.0, "kappa": 1.0}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let (_, r) = lavgap(&["regimes", "--config", c], dir.path());
    assert_eq!(r["result"]["verdict"], "Gap-Sharpness");
    let (_, r) = lavgap(&["regimes", "--config", c, "--kappa", "3"], dir.path());
    assert_eq!(r["result"]["verdict"], "NoGap-I");
    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    assert_eq!(lavgap(&["regimes", "--config", c], dir.path()).0, 1);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_lavgap"))
        .args(["regimes"])
        .env("LAVGAP_OUT", dir.path().join("env-out"))
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(dir.path().join("env-out/regimes.json").exists());
}

#[test]
fn minimize_writes_field_and_iterate_log() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = lavgap(
        &["minimize", "--p", "1.8", "--q", "3", "--h", "1/8"],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(r["result"]["converged"], true);
    for f in [
        "minimize_iterations.csv",
        "minimize_field.csv",
        "minimize_mesh.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let mesh = dir.path().join("minimize_mesh.json");
    let field = dir.path().join("minimize_field.csv");
    let (code, e) = lavgap(
        &[
            "energy",
            "--p",
            "1.8",
            "--q",
            "3",
            "--mesh",
            mesh.to_str().unwrap(),
            "--field",
            field.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    let a = e["result"]["energy"]["total"].as_f64().unwrap();
    let b = r["result"]["energy"]["total"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
}

#[test]
fn regime_table_is_written_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    std::fs::write(&t, "n,p,q,kappa,gamma\n2,3,4.4,1,\n2,2,4,1,0.5\n").unwrap();
    let (code, r) = lavgap(&["regimes", "--table", t.to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdicts"][1]["verdict"], "NoGap-Hölder");
    let csv = std::fs::read_to_string(dir.path().join("regimes_table.csv")).unwrap();
    assert!(csv.contains("NoGap-Morrey"));
}
