use std::path::PathBuf;
use std::process::{Command, Output};

use objstab::output::{parse_num, read_csv};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_objstab"));
    c.env("OBJSTAB_THREADS", "2");
    c
}

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn objstab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn chain_stable_window() {
    let o = run(&["stability", &example("chain.json"), "--a", "1.20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("stable_r00"), "{text}");
}

#[test]
fn chain_unstable_and_seminorm_selection() {
    assert_eq!(code(&run(&["stability", &example("chain.json"), "--a", "1.30"])), 1);
    assert_eq!(code(&run(&["stability", &example("chain.json"), "--a", "1.00", "--seminorm", "R"])), 1);
}

#[test]
fn ideal_nanotube_is_not_critical() {
    let o = run(&["critical", &example("nanotube51.json"), "--ideal"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("critical: false"));
}

#[test]
fn curve_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = run(&["curve", &example("chain.json"), "--a", "1.22", "--grid", "128", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(csv.starts_with("# tool: objstab"));
    assert!(csv.contains("# phi_order:") && csv.contains("# coset_reps:") && csv.contains("# tolerances:"));
    let rows = read_csv(&csv);
    assert!(csv.contains("\nrho_id,k1,lambda_R,lambda_R00,rankB_R,rankB_R00,flags\n"));
    assert!(rows.len() > 128 && rows.iter().all(|r| r.len() == 7));
    let min00 = rows.iter().filter_map(|r| parse_num(&r[3])).fold(f64::INFINITY, f64::min);
    assert!(min00 > 0.0 && min00 < 1.0, "{min00}");
    let svg = std::fs::read_to_string(dir.path().join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));

    // Identical runs give identical bytes.
    let again = tempfile::tempdir().unwrap();
    let o = run(&["curve", &example("chain.json"), "--a", "1.22", "--grid", "128", "--out", &again.path().display().to_string()]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv, std::fs::read_to_string(again.path().join("curve.csv")).unwrap());
}

#[test]
fn oracle_checks_pass_on_the_chain() {
    let o = run(&["stability", &example("chain.json"), "--a", "1.20", "--oracle", "--grid", "256"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches("oracle supercell").count(), 8);
    assert!(!text.contains("FAIL"));
}

#[test]
fn sweep_locates_both_chain_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep",
        &example("chain.json"),
        "--from",
        "1.10",
        "--to",
        "1.30",
        "--steps",
        "11",
        "--grid",
        "256",
        "--seminorm",
        "R00",
        "--out",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text.lines().find(|l| l.starts_with("zero crossings of lambda_R00")).unwrap();
    let z: Vec<f64> = line.split(':').nth(1).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(z.len(), 2, "{line}");
    assert!((z[0] - (16.0f64 / 7.0).powf(1.0 / 6.0)).abs() < 1e-3);
    assert!((z[1] - (26.0f64 / 7.0).powf(1.0 / 6.0)).abs() < 1e-3);
    assert!(dir.path().join("sweep.csv").exists() && dir.path().join("sweep.svg").exists());
}

#[test]
fn validate_dual_and_seminorm_check() {
    assert_eq!(code(&run(&["validate", &example("nanotube51.json")])), 0);
    let o = run(&["dual", &example("nanotube51.json")]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("K_rho"));
    let o = run(&["seminorm", &example("chain.json"), "--check", "--trials", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn config_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"structure": {"d": 2}}"#).unwrap();
    let o = run(&["stability", &bad.display().to_string()]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/structure"));
    assert_eq!(code(&run(&["stability", "/nonexistent/config.json"])), 4);
    assert_eq!(code(&run(&["stability"])), 4);

    let o = bin().args(["critical", &example("chain.json")]).env("OBJSTAB_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 4);
}
