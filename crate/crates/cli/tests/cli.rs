use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ssl-rate-lab"));
    c.env_remove("SSL_RATE_LAB_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

fn bound_value(stdout: &[u8], name: &str) -> f64 {
    let text = String::from_utf8_lossy(stdout);
    let names = column(&text, "name");
    let values = column(&text, "value");
    let i = names.iter().position(|n| n == name).unwrap();
    values[i].parse().unwrap()
}

#[test]
fn bounds_two_coin_kl() {
    let out = run(&["bounds", "--alpha", "0.1", "--beta", "0.1", "--ell", "1"]);
    assert!(out.status.success());
    assert!((bound_value(&out.stdout, "kl_two_point") - 0.162186).abs() < 1e-6);
}

#[test]
fn bounds_pi_c_floor() {
    let out = run(&["bounds", "--c", "0.1", "--ell", "10"]);
    assert!(out.status.success());
    let v = bound_value(&out.stdout, "pi_c_sl_floor");
    assert!((v - 0.05 * (-3.2f64).exp()).abs() < 1e-15);
}

#[test]
fn bounds_missing_parameter_exits_2() {
    assert_eq!(run(&["bounds", "--ell", "4", "--alpha", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--alpha", "0.1", "--beta", "0.1"]).status.code(), Some(2));
}

fn sweep_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn sweep_square_budget_slope_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let flags = ["--family", "pi1", "--learner", "majority", "--budget", "square", "--seed", "7"];
    assert!(sweep_into(&a, &flags).status.success());
    assert!(sweep_into(&b, &flags).status.success());
    let csv_a = std::fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("sweep.csv")).unwrap());

    let text = String::from_utf8(csv_a.clone()).unwrap();
    let slope: f64 = column(&text, "risk_slope").last().unwrap().parse().unwrap();
    assert!((slope + 1.0).abs() < 0.1, "slope {slope}");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("sweep.manifest.json")).unwrap()).unwrap();
    let hash = manifest["manifest_hash"].as_str().unwrap();
    assert!(column(&text, "manifest_hash").iter().all(|h| h == hash));

    // Replaying the manifest elsewhere reproduces the table.
    let replay = run(&["sweep", "--config", a.join("sweep.manifest.json").to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(replay.status.success());
    assert_eq!(csv_a, std::fs::read(c.join("sweep.csv")).unwrap());
}

#[test]
fn sweep_with_monte_carlo_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"ell_grid": [4, 8], "mc_reps": 500, "learners": ["erm"]}"#).unwrap();
    let run_with = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        column(&std::fs::read_to_string(out.join("sweep.csv")).unwrap(), "mc_estimate")
    };
    assert_eq!(run_with("x", "1"), run_with("y", "1"));
    assert_ne!(run_with("x", "1"), run_with("z", "2"));
}

#[test]
fn empty_learner_list_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"learners": []}"#).unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_grid_and_unknown_keys_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sweep_into(tmp.path(), &["--ell", "8,4"]).status.code(), Some(2));
    assert_eq!(sweep_into(tmp.path(), &["--budget", "cubic"]).status.code(), Some(2));
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"sede": 1}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn enumeration_budget_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"node_cap": 10, "learners": ["erm"], "ell_grid": [64]}"#).unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Monte Carlo"));
}

#[test]
fn verify_filter() {
    let out = run(&["verify", "--only", "theorem1"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS reduction"));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 1);
    assert_eq!(run(&["verify", "--only", "bogus"]).status.code(), Some(2));
}

#[test]
fn verify_failure_exits_nonzero() {
    let out = run(&["verify", "--only", "pi-ell"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL pi-ell"));
}

#[test]
fn jobs_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("SSL_RATE_LAB_JOBS", "1")
        .args(["minimax", "--ell", "4,8,16", "--learner", "majority,erm", "--out", tmp.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("minimax.csv")).unwrap();
    assert_eq!(column(&text, "best_learner"), vec!["majority"; 3]);
}

#[test]
fn mixture_and_compare_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    assert!(run(&["mixture", "--ell", "8,16,32", "--out", d]).status.success());
    assert!(run(&["compare", "--ell", "8,16,32", "--out", d]).status.success());
    let cmp = std::fs::read_to_string(tmp.path().join("compare.csv")).unwrap();
    let ratios: Vec<f64> = column(&cmp, "ratio").iter().map(|r| r.parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(run(&["mixture", "--family", "rich", "--out", d]).status.code(), Some(2));
}
