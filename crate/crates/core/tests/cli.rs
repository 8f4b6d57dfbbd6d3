use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memwave::cli::{read_plan, write_plan};

const K2: &str = r#"modes = 16

[kernel]
c = [1.0, 2.0]
gamma = [1.0, 3.0]

[domain]
type = "interval"

[initial]
random = { beta = 1.0, amplitude = 1.0, seed = 42 }
"#;

fn memwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memwave"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn horizon_and_bound_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.toml", K2);
    let out = memwave(&["synthesize", "--config", s(&cfg), "--horizon", "6", "--bound", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = memwave(&["synthesize", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &K2.replace("gamma = [1.0, 3.0]", "gamma = [1.0, 1.0]"));
    let out = memwave(&["roots", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel.gamma"));

    let cfg = write(dir.path(), "extra.toml", &format!("{K2}\n[extra]\nx = 1\n"));
    let out = memwave(&["roots", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));

    let out = memwave(&["roots", "--config", s(&dir.path().join("missing.toml"))]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn synthesize_then_verify_passes_and_plan_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.toml", K2);
    let plan = dir.path().join("plan.json");
    let report = dir.path().join("report.json");
    let out = memwave(&["synthesize", "--config", s(&cfg), "--horizon", "6", "--out", s(&plan)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let bytes = std::fs::read(&plan).unwrap();
    let again = dir.path().join("again.json");
    write_plan(&again, &read_plan(&plan).unwrap()).unwrap();
    assert_eq!(bytes, std::fs::read(&again).unwrap());

    let out = memwave(&["verify", "--config", s(&cfg), "--plan", s(&plan), "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(rep["all_pass"], serde_json::Value::Bool(true));
    assert_eq!(rep["modes"].as_array().unwrap().len(), 16);
}

#[test]
fn plan_from_another_kernel_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.toml", K2);
    let other = write(dir.path(), "k2b.toml", &K2.replace("c = [1.0, 2.0]", "c = [1.0, 2.5]"));
    let plan = dir.path().join("plan.json");
    let out = memwave(&["synthesize", "--config", s(&cfg), "--horizon", "6", "--out", s(&plan)]);
    assert!(out.status.success());
    let out = memwave(&["verify", "--config", s(&other), "--plan", s(&plan)]);
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(4));
}

#[test]
fn roots_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.toml", K2);
    let out = memwave(&["roots", "--config", s(&cfg)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,alpha,mu,nu,q_1,paper_residue_sum,corrected_residue_sum")
    );
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert_eq!(first[1], 1.0);
    // paper sum is -1 / (α² K̂(0)) with K̂(0) = 1 + 2/9
    assert!((first[5] + 9.0 / 11.0).abs() < 1e-12);
    assert!(first[6].abs() < 1e-12);
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn sweep_rows_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.toml", K2);
    let out = memwave(&["sweep", "--config", s(&cfg), "--horizons", "4,6,8,10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,global_bound,max_terminal_residual"));
    let bounds: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(bounds.len(), 4);
    assert!(bounds.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn simulate_trace_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.toml", &K2.replace("modes = 16", "modes = 2"));
    let plan = dir.path().join("plan.json");
    assert!(memwave(&["synthesize", "--config", s(&cfg), "--horizon", "4", "--out", s(&plan)])
        .status
        .success());
    let out = memwave(&["simulate", "--config", s(&cfg), "--plan", s(&plan), "--stride", "1000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,n,theta,dtheta,u,invariant_drift,w_1,w_2\n"));
    assert!(text.lines().count() > 2);
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["k2.toml", "k1-explicit.toml"] {
        let out = memwave(&["roots", "--config", s(&root.join(name))]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
