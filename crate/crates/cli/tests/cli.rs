use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rbsim(args: &[&str], config: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rbsim"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.env_remove("RBSIM_WORKERS").output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

/// Data rows of a CSV written by the tool, as (header, rows).
fn table(dir: &Path, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = read(dir, name);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(dir: &Path, name: &str, col: &str) -> Vec<f64> {
    let (h, rows) = table(dir, name);
    let i = h.iter().position(|c| c == col).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn markov_curve_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"noise": {"kind": "white", "gamma": 0.01}, "method": "markov", "lengths": {"start": 1, "stop": 100}}"#;
    let out = rbsim(&["curve"], Some(cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, _) = table(dir.path(), "curve.csv");
    assert_eq!(header, ["m", "t_over_tg", "p0", "stderr", "method"]);
    let m = column(dir.path(), "curve.csv", "m");
    let p = column(dir.path(), "curve.csv", "p0");
    assert_eq!(m.len(), 100);
    for (m, p) in m.iter().zip(&p) {
        assert!((p - (0.5 + 0.5 * (-4.0 * 0.01 * m / 3.0).exp())).abs() < 1e-12);
    }
}

#[test]
fn auto_method_picks_coarse_for_slow_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"noise": {"kind": "ou", "sigma": 0.01, "tau_c": 1000}, "lengths": [1, 10, 100], "fit": {}}"#;
    let out = rbsim(&["curve"], Some(cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let side: Value = serde_json::from_str(&read(dir.path(), "curve.json")).unwrap();
    assert_eq!(side["selection"]["method"], "coarse");
    assert_eq!(side["method"], "coarse");
    assert!(side["f_coefficients"]["f_curr"].as_f64().unwrap() > 0.6);
    assert_eq!(side["library_version"], env!("CARGO_PKG_VERSION"));
    assert!(side["fit"].is_object());
}

#[test]
fn zero_noise_survives() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"noise": {"kind": "ou", "sigma": 0, "tau_c": 1}, "method": "plme", "lengths": [1, 2, 50]}"#;
    assert!(rbsim(&["curve"], Some(cfg), dir.path()).status.success());
    assert!(column(dir.path(), "curve.csv", "p0").iter().all(|&p| p == 1.0));
}

#[test]
fn reruns_are_byte_identical_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"noise": {"kind": "ou", "sigma": 0.05, "tau_c": 2}, "method": "mc", "lengths": [1, 4],
                  "mc": {"n_sequences": 40, "n_noise_per_sequence": 2, "substeps_per_gate": 8}}"#;
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("# generated_unix=")).collect::<Vec<_>>().join("\n");
    assert!(rbsim(&["curve", "--workers", "1"], Some(cfg), dir.path()).status.success());
    let first = strip(read(dir.path(), "curve.csv"));
    assert!(rbsim(&["curve", "--workers", "3"], Some(cfg), dir.path()).status.success());
    let second = strip(read(dir.path(), "curve.csv"));
    assert_eq!(first, second);
    assert!(first.starts_with("# config_sha256="));
    let side: Value = serde_json::from_str(&read(dir.path(), "curve.json")).unwrap();
    assert!(first.contains(side["config_sha256"].as_str().unwrap()));
    assert!(side["step_size_audit"].is_object());

    assert!(rbsim(&["curve", "--seed", "7"], Some(cfg), dir.path()).status.success());
    assert_ne!(first, strip(read(dir.path(), "curve.csv")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str], cfg: Option<&str>| rbsim(args, cfg, dir.path()).status.code().unwrap();
    assert_eq!(code(&["curve"], Some(r#"{"noise": {"kind": "white", "gamma": 0.01}, "colour": 1}"#)), 2);
    assert_eq!(code(&["curve"], Some(r#"{"noise": {"kind": "white", "gamma": -1}}"#)), 2);
    assert_eq!(code(&["curve"], Some(r#"{"noise": {"kind": "ou", "sigma": 0.1, "tau_c": 1}, "method": "markov"}"#)), 2);
    assert_eq!(code(&["curve"], Some(r#"{"experiment": "figure1"}"#)), 2);
    assert_eq!(code(&["curve"], None), 2);
    assert_eq!(code(&["validate"], None), 0);
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("out");
    std::fs::write(&blocker, "a file, not a directory").unwrap();
    let out = rbsim(&["fcoef"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn fcoef_lists_all_implementations() {
    let dir = tempfile::tempdir().unwrap();
    assert!(rbsim(&["fcoef"], None, dir.path()).status.success());
    let (_, rows) = table(dir.path(), "fcoef.csv");
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["zsx", "u3", "instant"]);
    let fc = column(dir.path(), "fcoef.csv", "f_curr");
    assert!((fc[2] - 1.0).abs() < 1e-8);
}

#[test]
fn fit_reads_a_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"noise": {"kind": "white", "gamma": 0.01}, "method": "markov", "lengths": {"start": 1, "stop": 300, "step": 3}}"#;
    assert!(rbsim(&["curve"], Some(cfg), dir.path()).status.success());
    let input = dir.path().join("curve.csv");
    std::fs::copy(dir.path().join("out/curve.csv"), &input).unwrap();
    let cfg = format!(r#"{{"input": {:?}}}"#, input.to_str().unwrap());
    let out = rbsim(&["fit"], Some(&cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(dir.path(), "fit.csv");
    let gamma: f64 = rows.iter().find(|r| r[0] == "gamma_inf").unwrap()[1].parse().unwrap();
    assert!((gamma - 4.0 * 0.01 / 3.0).abs() < 1e-8);
}

#[test]
fn figure1_normalization_and_spread() {
    let dir = tempfile::tempdir().unwrap();
    assert!(rbsim(&["figure1"], Some(r#"{"tau_cs": [1e-4, 10]}"#), dir.path()).status.success());
    let r = column(dir.path(), "figure1.csv", "epsilon_over_ref");
    assert_eq!(r.len(), 6);
    for k in 0..3 {
        assert!((r[2 * k] - 1.0).abs() < 1e-2);
    }
    let at10 = [r[1], r[3], r[5]];
    let ratio = at10.iter().copied().fold(0.0, f64::max) / at10.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((1.5..=2.2).contains(&ratio), "{ratio}");
}

#[test]
fn figure2_rates_decrease_with_tau() {
    let dir = tempfile::tempdir().unwrap();
    assert!(rbsim(&["figure2"], Some(r#"{"tau_cs": [10, 30, 60]}"#), dir.path()).status.success());
    let g = column(dir.path(), "figure2_rates.csv", "gamma_inf");
    assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
    assert!(column(dir.path(), "figure2_curves.csv", "p0").iter().all(|&p| p > 0.5 && p <= 1.0));
}

#[test]
fn compare_without_monte_carlo_leaves_mc_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"noise": {"kind": "ou", "sigma": 0.05, "tau_c": 30}, "lengths": [1, 10, 100]}"#;
    assert!(rbsim(&["compare"], Some(cfg), dir.path()).status.success());
    let (h, rows) = table(dir.path(), "compare.csv");
    let i = h.iter().position(|c| c == "mc").unwrap();
    assert!(rows.iter().all(|r| r[i].is_empty()));
}

#[test]
fn sm_validation_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"tau_cs": [0.5], "omega_lows": [1], "lengths": [1, 2],
                  "mc": {"n_sequences": 20, "n_noise_per_sequence": 2, "substeps_per_gate": 8}}"#;
    let out = rbsim(&["sm-validation"], Some(cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(dir.path(), "sm_summary.csv");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "zero_noise");
    assert_eq!(rows[0][4], "true");
    let (_, fits) = table(dir.path(), "sm_first_gate.csv");
    assert_eq!(fits.len(), 2);
    let n = column(dir.path(), "sm_convergence.csv", "sequences");
    assert_eq!(n.iter().copied().fold(0.0, f64::max), 20.0);
}
