use std::process::Command;

use stencil_lab::cli::{run_with, EXIT_ASSUMPTION, THREADS_ENV};
use stencil_lab::presets::preset_source;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["stencil-lab"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const X_INDEPENDENT: &str = r#"[problem]
dimension = 1
kind = "periodic"
lower = [0]
upper = ["2*pi"]
h = "pi/8"

[constants]
tau0 = 0.5

[[stencil]]
lambda = [1]
q = 1
p = 0.5

[[stencil]]
lambda = [-1]
q = 1
p = 0.5

[[stencil]]
lambda = [2]
q = 0.25

[[stencil]]
lambda = [-2]
q = 0.25

[coefficients]
c = 1.5
f = "cos(x1)"
"#;

#[test]
fn heat_config_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "heat.toml", preset_source("heat-periodic").unwrap());
    let csv = dir.path().join("heat.csv");
    let (code, out, err) = run(&["solve-parabolic", "-c", &cfg, "-o", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("csv"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,u"));
    assert_eq!(lines.count(), 2 * 32);
}

#[test]
fn x_independent_coefficients_pass_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "const.toml", X_INDEPENDENT);
    let csv = dir.path().join("checks.csv");
    let (code, _, err) = run(&["check-assumptions", "-c", &cfg, "--strict", "-o", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    for line in text.lines().skip(1) {
        let verdict = line.split(',').nth(2).unwrap();
        assert!(verdict == "pass" || verdict == "not-applicable", "{line}");
    }
    assert!(text.lines().skip(1).any(|l| l.contains(",quadratic_form,pass,")));
}

#[test]
fn zero_reaction_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "bad.toml", &X_INDEPENDENT.replace("c = 1.5", "c = \"0\""));
    let (code, out, err) = run(&["solve-elliptic", "-c", &cfg]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("solve-elliptic: "), "{err}");
}

#[test]
fn extrapolation_writes_order_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rich.csv");
    let (code, out, err) = run(&["extrapolate", "-p", "manufactured-cos", "-k", "2", "-o", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("observed order"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("k,h,sup_error,order"));
    let order: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(order >= 1.6, "{order}");
}

#[test]
fn strict_check_failure_exits_with_three() {
    let (code, _, err) = run(&["check-assumptions", "-p", "transport-increasing-b", "--strict"]);
    assert_eq!(code, EXIT_ASSUMPTION, "{err}");
    let (code, out, _) = run(&["check-assumptions", "-p", "transport-increasing-b"]);
    assert_eq!(code, 0);
    assert!(out.contains("fail"));
}

#[test]
fn csv_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |args: &[&str], name: &str| {
        let csv = dir.path().join(name);
        let mut full = args.to_vec();
        full.extend(["-o", csv.to_str().unwrap()]);
        assert_eq!(run(&full).0, 0);
        std::fs::read(&csv).unwrap()
    };
    for (i, args) in [
        &["solve-elliptic", "-p", "drift-example"][..],
        &["solve-parabolic", "-p", "heat-2d"][..],
        &["gradient-study", "-p", "degenerate-q-x2", "--h-list", "0.1,0.05"][..],
        &["check-assumptions", "-p", "transport-decreasing-b"][..],
    ]
    .into_iter()
    .enumerate()
    {
        assert_eq!(read(args, &format!("a{i}.csv")), read(args, &format!("b{i}.csv")), "{args:?}");
    }
}

#[test]
fn argument_errors_are_single_lines() {
    for args in [
        &["solve-elliptic"][..],
        &["solve-elliptic", "-p", "heat-periodic", "--tol", "abc"][..],
        &["frobnicate"][..],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 1, "{args:?}");
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("stencil-lab: "), "{err}");
    }
    let (code, _, err) = run(&["solve-elliptic", "-p", "no-such-preset"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("solve-elliptic: ") && err.lines().count() == 1, "{err}");
    let (code, _, err) = run(&["consistency", "-p", "heat-periodic", "--h", "0.3"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("consistency: ") && err.lines().count() == 1, "{err}");
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let lambda0 = X_INDEPENDENT.replacen("lambda = [-2]", "lambda = [0]", 1);
    let cfg = write_config(&dir, "l0.toml", &lambda0);
    let (code, _, err) = run(&["solve-elliptic", "-c", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("line 25") && err.contains("lambda = 0"), "{err}");
    let cfg = write_config(&dir, "tau.toml", &X_INDEPENDENT.replace("tau0 = 0.5", "tau0 = 1.5"));
    let (code, _, err) = run(&["solve-elliptic", "-c", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("line 9") && err.contains("tau0"), "{err}");
}

#[test]
fn binary_reports_bad_thread_count() {
    let out = Command::new(env!("CARGO_BIN_EXE_stencil-lab"))
        .args(["presets"])
        .env(THREADS_ENV, "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("presets: ") && err.lines().count() == 1, "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_stencil-lab"))
        .args(["presets"])
        .env(THREADS_ENV, "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().lines().any(|l| l == "model-1d"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
    let (code, out, _) = run(&["show-preset", "heat-periodic"]);
    assert_eq!(code, 0);
    assert_eq!(out, preset_source("heat-periodic").unwrap());
}
