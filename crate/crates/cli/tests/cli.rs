use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn frontlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
[reaction]
alpha = 0.4

[initial_data]
family = "sub_exponential"
beta = 0.5
mu = 5

[grid]
dx = 0.1

[time]
t_end = 3
dt = 0.02
snapshot_times = [0, 1.5, 3]

[measurement]
lambdas = [0.5, 0.25]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_the_artifact_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = frontlab(&["simulate", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "snapshots.csv", "trace_lambda_0.5.csv", "trace_lambda_0.25.csv", "fits.json", "plot.py"] {
        assert!(out.join("small").join(f).exists(), "{f}");
    }
    let trace = fs::read_to_string(out.join("small/trace_lambda_0.5.csv")).unwrap();
    assert!(trace.starts_with("t,x_lambda\n0.0,"));
    assert!(stdout(&o).contains("expected power_acceleration"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(frontlab(&["simulate", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(frontlab(&["simulate", &cfg, "--out", b.to_str().unwrap()]).status.success());
    for f in ["snapshots.csv", "trace_lambda_0.5.csv", "trace_lambda_0.25.csv", "fits.json", "config.toml"] {
        let x = fs::read(a.join("small").join(f)).unwrap();
        let y = fs::read(b.join("small").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("dt = 0.02", "dt = 0.02\ntheta = 0.3");
    let cfg = write_config(dir.path(), "bad.toml", &bad);
    let o = frontlab(&["simulate", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("time.theta") && err.contains("line 16"), "{err}");

    let o = frontlab(&["simulate", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = frontlab(&["preset", "fig42", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig9"));
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Logarithmic data needs a doubly exponential domain, which cannot be sized automatically.
    let text = r#"
[reaction]
alpha = 0.4

[initial_data]
family = "logarithmic"
beta = 1

[grid]
dx = 0.1

[time]
t_end = 400
dt = 0.1
"#;
    let cfg = write_config(dir.path(), "huge.toml", text);
    let o = frontlab(&["simulate", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_hypothesis_passes() {
    let o = frontlab(&["verify", "hypothesis"]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("verify hypothesis: PASS\n"));
}

#[test]
fn verify_envelope_passes() {
    let o = frontlab(&["verify", "envelope"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn classify_prints_the_regime() {
    let o = frontlab(&["classify", "--alpha", "0.2", "--family", "sub-exponential", "--beta", "0.8333333333333334"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("regime: finite_speed"));

    let o = frontlab(&["classify", "--alpha", "0.4", "--family", "sub-exponential", "--beta", "0.2"]);
    assert!(stdout(&o).contains("x_lambda(t) ~ t^3.571429"));

    let o = frontlab(&["classify", "--alpha", "0.4", "--family", "logarithmic", "--beta", "2", "--times", "1,2"]);
    let text = stdout(&o);
    assert!(text.contains("regime: log_exp_acceleration"));
    assert_eq!(text.lines().filter(|l| l.starts_with("1,") || l.starts_with("2,")).count(), 2);

    let o = frontlab(&["classify", "--alpha", "0.4", "--family", "algebraic", "--beta", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn preset_writes_under_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(&["preset", "fig2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("fig2/classification.csv").exists());
    assert!(stdout(&o).contains("finite speed iff beta >= 0.833333"));
}
