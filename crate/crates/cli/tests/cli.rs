use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Copies a shipped config into a scratch directory so reports land there.
fn scratch(name: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let dst = dir.path().join(name);
    std::fs::copy(configs().join(name), &dst).unwrap();
    (dir, dst)
}

fn dominion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dominion")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn edit(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v = read_json(path);
    f(&mut v);
    std::fs::write(path, v.to_string()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_example_is_feasible() {
    let (dir, cfg) = scratch("spring.json");
    let out = dominion(&["--no-timestamp", "certify", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("spring.certify.json"));
    assert_eq!(r["passed"], true);
    assert!(r.get("generated_unix").is_none());
    let slow = r["result"]["slow"]["margins"].as_array().unwrap();
    assert_eq!(slow.len(), 2);
    assert_eq!(r["result"]["fast"]["worst_margin"], 0.0);
    let names: Vec<&str> = r["tolerances"].as_array().unwrap().iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"lmi_feasibility_margin"));
}

#[test]
fn larger_sigma_shifts_margin_and_fails() {
    let (dir, cfg) = scratch("spring.json");
    assert_eq!(code(&dominion(&["certify", s(&cfg), "--report", s(&dir.path().join("base.json"))])), 0);
    edit(&cfg, |v| v["certificate"]["sigma_r"] = 10.0.into());
    let out = dominion(&["certify", s(&cfg), "--report", s(&dir.path().join("big.json"))]);
    assert_eq!(code(&out), 2);
    let m = |f: &str| read_json(&dir.path().join(f))["result"]["slow"]["worst_margin"].as_f64().unwrap();
    // the residual is affine in σ with unit slope on the identity
    assert!((m("big.json") - m("base.json") - 9.99).abs() < 1e-9);
}

#[test]
fn one_dimensional_stable_config_certifies() {
    let (_dir, cfg) = scratch("stable_1d.json");
    assert_eq!(code(&dominion(&["certify", s(&cfg)])), 0);
}

#[test]
fn decouple_scalar_matches_quadratic_root() {
    let (dir, cfg) = scratch("scalar.json");
    let out = dominion(&["decouple", s(&cfg), "--eps", "0.1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("scalar.decouple.json"));
    let l = r["result"]["vertices"][0]["l"][0][0].as_f64().unwrap();
    // εL² − L − 1 = 0 with a = 0, b = c = 1, d = −1
    let root = (1.0 - 1.4f64.sqrt()) / 0.2;
    assert!((l - root).abs() < 1e-10, "{l} vs {root}");
}

#[test]
fn decouple_uncoupled_gives_identity() {
    let (dir, cfg) = scratch("stable_1d.json");
    assert_eq!(code(&dominion(&["decouple", s(&cfg), "--eps", "0.1"])), 0);
    let r = read_json(&dir.path().join("stable_1d.decouple.json"));
    let t = &r["result"]["vertices"][0]["t"];
    assert_eq!(t, &serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
}

#[test]
fn decouple_example_is_block_diagonal() {
    let (dir, cfg) = scratch("spring.json");
    assert_eq!(code(&dominion(&["decouple", s(&cfg), "--eps", "0.01"])), 0);
    let r = read_json(&dir.path().join("spring.decouple.json"));
    for v in r["result"]["vertices"].as_array().unwrap() {
        assert!(v["block_diag_residual"].as_f64().unwrap() <= 1e-8);
    }
}

#[test]
fn epsilon_star_example_and_edge_cases() {
    let (dir, cfg) = scratch("spring.json");
    assert_eq!(code(&dominion(&["epsilon-star", s(&cfg)])), 0);
    let r = read_json(&dir.path().join("spring.epsilon-star.json"));
    assert!(r["result"]["eps_hat"].as_f64().unwrap() >= 0.01);

    let (dir, cfg) = scratch("stable_1d.json");
    assert_eq!(code(&dominion(&["epsilon-star", s(&cfg)])), 0);
    let r = read_json(&dir.path().join("stable_1d.epsilon-star.json"));
    assert_eq!(r["result"]["eps_hat"], r["result"]["eps_max"]);

    let (_dir, cfg) = scratch("unstable_fast.json");
    let out = dominion(&["epsilon-star", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn simulate_reports_verdicts_and_csvs() {
    let (dir, cfg) = scratch("harmonic.json");
    let out_dir = dir.path().join("out");
    let out = dominion(&["simulate", s(&cfg), "--t-final", "5", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&out_dir.join("harmonic.simulate.json"));
    assert_eq!(r["result"]["trajectories"][0]["converged"], false);
    let csv = std::fs::read_to_string(out_dir.join("traj_0.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,z1\n"));

    let (dir, cfg) = scratch("stable_1d.json");
    let out_dir = dir.path().join("out");
    assert_eq!(code(&dominion(&["simulate", s(&cfg), "--out", s(&out_dir)])), 0);
    let r = read_json(&out_dir.join("stable_1d.simulate.json"));
    assert_eq!(r["result"]["converged"], 2);
    assert_eq!(r["result"]["equilibria"], serde_json::json!([[0.0, 0.0]]));
}

#[test]
fn probe_is_deterministic() {
    let (dir, cfg) = scratch("spring.json");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = dominion(&[
            "--no-timestamp",
            "monotone-probe",
            s(&cfg),
            "--pairs",
            "8",
            "--t-final",
            "2",
            "--seed",
            "5",
            "--report",
            s(&path),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let r: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(r["result"]["interior"], 8 * 200);
}

#[test]
fn probe_of_positive_definite_certificate_uses_weighted_energy() {
    let (dir, cfg) = scratch("stable_1d.json");
    assert_eq!(code(&dominion(&["monotone-probe", s(&cfg), "--pairs", "10"])), 0);
    let r = read_json(&dir.path().join("stable_1d.monotone-probe.json"));
    assert_eq!(r["result"]["mode"], "weighted_energy");
    assert_eq!(r["result"]["outside"], 0);
}

#[test]
fn bad_input_exits_with_one() {
    let (dir, cfg) = scratch("spring.json");
    edit(&cfg, |v| v["surprise"] = 1.into());
    let out = dominion(&["certify", s(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("surprise"));

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&dominion(&["certify", s(&missing)])), 1);
    assert_eq!(code(&dominion(&["decouple", s(&cfg)])), 1);
    assert_eq!(code(&dominion(&["frobnicate"])), 1);

    let (_dir, cfg) = scratch("scalar.json");
    let out = dominion(&["certify", s(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("certificate"));
}

#[test]
fn reproduce_paper_writes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let out = dominion(&["--no-timestamp", "reproduce-paper", "--out", s(&a), "--pairs", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    for i in 0..5 {
        assert!(a.join(format!("traj_{i}.csv")).exists());
    }
    let r = read_json(&a.join("report.json"));
    assert_eq!(r["result"]["simulate"]["equilibria"].as_array().unwrap().len(), 3);
    assert_eq!(r["result"]["simulate"]["converged"], 5);
    // the written config drives the standalone commands too
    assert_eq!(code(&dominion(&["certify", s(&a.join("config.json"))])), 0);
}

#[test]
fn reproduce_paper_reports_failed_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        dominion(&["reproduce-paper", "--out", s(dir.path()), "--sigma-r", "10", "--pairs", "4", "--t-final", "5"]);
    assert_eq!(code(&out), 2);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["result"]["certify"]["feasible"], false);
    // the simulation still ran
    assert_eq!(r["result"]["simulate"]["trajectories"].as_array().unwrap().len(), 5);
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"slow LMI"), "{failed:?}");
}
