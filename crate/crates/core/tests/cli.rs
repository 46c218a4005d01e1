//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tweezer-exchange");

const MEASURED: &str = "\
# parity contrast and aligned populations
contrast = 0.49
contrast_se = 0.04
p_upup = 0.071
p_upup_se = 0.014
p_dndn = 0.016
p_dndn_se = 0.005
ap_success_f = 0.69
ap_success_f_se = 0.02
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn report_value(stdout: &[u8], key: &str) -> String {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key).map(|(_, v)| v.to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn certify_reports_entanglement() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.txt", MEASURED);
    let out = run(&["certify", &input, "--fail-on-separable"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report_value(&out.stdout, "verdict"), "entangled");
    assert_eq!(report_value(&out.stdout, "c_bound"), "0.134818");
    let sep: f64 = report_value(&out.stdout, "sigma_separation").parse().unwrap();
    assert!((7.0..8.5).contains(&sep));
    let f_succ: f64 = report_value(&out.stdout, "f_succ").parse().unwrap();
    assert!((f_succ - 0.634).abs() < 0.002);
    assert_eq!(report_value(&out.stdout, "concurrence_lower"), "0.177591");
}

#[test]
fn certify_monte_carlo_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.txt", MEASURED);
    let a = run(&["certify", &input, "--monte-carlo", "20000", "--seed", "5"]);
    let b = run(&["certify", &input, "--monte-carlo", "20000", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let sep: f64 = report_value(&a.stdout, "mc_separation").parse().unwrap();
    assert!((6.5..9.0).contains(&sep), "{sep}");
}

#[test]
fn separable_input_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.txt", &MEASURED.replace("contrast = 0.49", "contrast = 0.12"));
    let out = run(&["certify", &input, "--fail-on-separable"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report_value(&out.stdout, "verdict"), "not certified");
    assert_eq!(run(&["certify", &input]).status.code(), Some(0));
}

#[test]
fn missing_field_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.txt", &MEASURED.replace("p_upup_se = 0.014\n", ""));
    let out = run(&["certify", &input]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_upup_se"));
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"trap\": 3}");
    assert_eq!(run(&["exchange-scan", "--config", &bad]).status.code(), Some(1));
    assert_eq!(run(&["exchange-scan", "--shots", "0"]).status.code(), Some(1));
}

#[test]
fn exchange_scan_writes_one_row_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("scan.csv");
    let out = run(&["exchange-scan", "--shots", "50", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&out_path);
    assert_eq!(rows.len(), 25);
    assert_eq!(header[0], "t_s");
    let w: Vec<usize> = ["w_success", "w_aligned_upup", "w_aligned_dndn", "w_failure", "w_loss"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    for row in &rows {
        let total: f64 = w.iter().map(|&k| row[k]).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["j_ex_hz"].as_f64().unwrap() > 0.0);
}

#[test]
fn runs_are_reproducible_per_seed() {
    let a = run(&["parity-vs-exchange", "--shots", "40", "--seed", "9"]);
    let b = run(&["parity-vs-exchange", "--shots", "40", "--seed", "9"]);
    let c = run(&["parity-vs-exchange", "--shots", "40", "--seed", "10"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn parity_scan_and_depth_sweep_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let parity = dir.path().join("parity.csv");
    let out = run(&["parity-scan", "--shots", "100", "--out", parity.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_csv(&parity).1.len(), 25);

    let depth = dir.path().join("depth.csv");
    let out = run(&["depth-sweep", "--shots", "50", "--out", depth.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_csv(&depth).1.len(), 9);
}

#[test]
fn jex_and_default_config() {
    let out = run(&["jex"]);
    assert_eq!(out.status.code(), Some(0));
    let j: f64 = report_value(&out.stdout, "j_ex_harmonic_hz").parse().unwrap();
    assert!((j - 176.751_633).abs() < 1e-5);

    let dir = tempfile::tempdir().unwrap();
    let cfg = run(&["default-config"]);
    let path = write(dir.path(), "cfg.json", &String::from_utf8(cfg.stdout).unwrap());
    assert_eq!(run(&["jex", "--config", &path, "--depth-hz", "2.5e6", "--numeric"]).status.code(), Some(0));
}
