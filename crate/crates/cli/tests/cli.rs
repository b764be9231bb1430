use std::path::Path;
use std::process::{Command, Output};

fn hardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: &str = "[problem]\np = 4.0\nz = 1.0\n\n[grid]\nlevels = 5\nouter = 3\ntime_nodes = 6\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&hardy(&["--help"])), 0);
    assert_eq!(code(&hardy(&["--version"])), 0);
    assert_eq!(code(&hardy(&[])), 1);
    assert_eq!(code(&hardy(&["frobnicate"])), 1);
    assert_eq!(code(&hardy(&["kernel-table", "--theta", "x", "--dim", "1"])), 1);
    assert_eq!(code(&hardy(&["solve", "--config", "/nonexistent/cfg.toml"])), 1);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[problem]\nwhatever = 3\n");
    let o = hardy(&["sweep", "--config", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("whatever"));
    assert_eq!(code(&hardy(&["certify", "--template", "nope", "--config", &cfg])), 1);
}

#[test]
fn lemmas_print_json() {
    let o = hardy(&["lemmas", "--target", "weight_smoothing", "--samples", "5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let sup = v[0]["sup_ratio"].as_f64().unwrap();
    assert!((sup - 1.446409).abs() < 1e-5);
}

#[test]
fn solve_reports_and_numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ok.toml", SMALL);
    let o = hardy(&["solve", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["classification"], "converged");
    let cfg = write(dir.path(), "tight.toml", &format!("{SMALL}\n[quad]\nrel_tol = 1e-13\nmax_subdivisions = 1\n"));
    assert_eq!(code(&hardy(&["solve", "--config", &cfg])), 2);
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.toml", &SMALL.replace("z = 1.0", "z = 1.0\namplitude = 0.01"));
    let o = hardy(&["certify", "--template", "ubar", "--config", &ok, "--levels", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "certified");
    let big = write(dir.path(), "big.toml", &SMALL.replace("z = 1.0", "z = 1.0\namplitude = 5.0"));
    assert_eq!(code(&hardy(&["certify", "--template", "ubar", "--config", &big, "--levels", "1"])), 3);
}

#[test]
fn sweep_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = SMALL.replace("z = 1.0", "z = 1.0\ndata = \"zero\"\n\n[axes]\nc = [0.0]")
        + &format!("\n[output]\ndir = \"{}\"\nname = \"z\"\n", out.display());
    let cfg = write(dir.path(), "s.toml", &text);
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = hardy(&["sweep", "--config", &cfg]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<String> = ["z.csv", "z.json", "z_boundary.csv"].iter().map(|f| std::fs::read_to_string(out.join(f)).unwrap()).collect();
        runs.push(files);
    }
    assert!(runs[0] == runs[1]);
}

#[test]
fn kernel_table_is_saved() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.json");
    let o = hardy(&["kernel-table", "--theta", "1", "--dim", "1", "--resolution", "64", "--rmax", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
    assert_eq!(code(&hardy(&["kernel-table", "--theta", "2.5", "--dim", "1"])), 1);
}
