use std::path::Path;
use std::process::{Command, Output};

use anarchy_lab::{check_vug, format};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anarchy-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_mc_blind_passes_check() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "g.json");
    let out = run(&[
        "gen", "--family", "mc_blind", "--n", "6", "--k", "3", "--eps", "0.01", "--out", &file,
    ]);
    assert_eq!(code(&out), 0);
    let game = format::parse(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert!(check_vug(&game).unwrap().passed);
    assert_eq!(code(&run(&["check", "--instance", &file])), 0);
}

#[test]
fn gen_sim_has_optimum_955() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "sim.json");
    assert_eq!(
        code(&run(&[
            "gen", "--family", "sim", "--n", "10", "--k", "9", "--eps", "0.05", "--out", &file
        ])),
        0
    );
    let out = run(&["poa", "--instance", &file, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert!((report["opt_welfare"].as_f64().unwrap() - 9.55).abs() < 1e-9);
    assert!((report["worst_ne_welfare"].as_f64().unwrap() - 1.05).abs() < 1e-9);
}

#[test]
fn missing_parameter_is_a_usage_error() {
    let out = run(&["gen", "--family", "k_blind", "--n", "5"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--k"));
    assert_eq!(code(&run(&["gen"])), 1);
    assert_eq!(code(&run(&["gen", "--family", "nope"])), 1);
}

#[test]
fn generator_rejection_is_a_validation_failure() {
    let out = run(&["gen", "--family", "k_blind", "--n", "4", "--k", "4"]);
    assert_eq!(code(&out), 2);
}

const SUPERMODULAR: &str = r#"{"n": 2, "resources": [{"id": 0}, {"id": 1}],
  "table": [{"subset": [0], "value": 1}, {"subset": [1], "value": 1}, {"subset": [0, 1], "value": 3}],
  "action_sets": [[[], [0]], [[], [1]]], "utility": ["mc", "mc"], "compromise": ["normal", "normal"]}"#;

#[test]
fn supermodular_table_fails_check_with_witness() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "bad.json", SUPERMODULAR);
    let out = run(&["check", "--instance", &file]);
    assert_eq!(code(&out), 2);
    let text = stdout(&out);
    assert!(
        text.contains("FAIL") && text.contains("not_submodular"),
        "{text}"
    );

    let out = run(&["check", "--instance", &file, "--format", "json"]);
    assert_eq!(json(&out)["submodular"]["passed"], Value::Bool(false));
}

#[test]
fn equal_share_on_table_is_rejected() {
    let dir = TempDir::new().unwrap();
    let file = write(
        &dir,
        "es.json",
        &SUPERMODULAR.replace(r#"["mc", "mc"]"#, r#"["es", "mc"]"#),
    );
    let out = run(&["check", "--instance", &file]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("equal-share"));
}

#[test]
fn size_cap_exit_code() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "sim.json");
    run(&["gen", "--family", "sim", "--n", "6", "--out", &file]);
    assert_eq!(code(&run(&["poa", "--instance", &file, "--cap", "10"])), 3);
    assert_eq!(code(&run(&["pne", "--instance", &file])), 0);
}

#[test]
fn bound_violation_exit_code() {
    // complementary resources: both opted out is an equilibrium worth 0
    let dir = TempDir::new().unwrap();
    let file = write(
        &dir,
        "comp.json",
        r#"{"n": 2, "resources": [{"id": 0}, {"id": 1}],
  "table": [{"subset": [0], "value": 0}, {"subset": [1], "value": 0}, {"subset": [0, 1], "value": 10}],
  "action_sets": [[[], [0]], [[], [1]]], "utility": ["mc", "mc"], "compromise": ["normal", "normal"]}"#,
    );
    let out = run(&["poa", "--instance", &file, "--format", "json"]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["ratio"].as_f64(), Some(0.0));
}

#[test]
fn bounds_k_blind_sweep() {
    let out = run(&[
        "bounds", "--family", "k_blind", "--n", "8", "--k", "0..6", "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 1 + 6 * 3);
    for r in rows {
        assert_eq!(r["satisfied"], Value::Bool(true));
        assert!((r["ratio"].as_f64().unwrap() - r["closed_form"].as_f64().unwrap()).abs() < 1e-9);
        assert!(r["chains"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["holds"] == Value::Bool(true)));
    }
}

#[test]
fn bounds_mc_blind_matches_closed_form() {
    let out = run(&[
        "bounds", "--family", "mc_blind", "--n", "8", "--sweep", "k=1..6", "--labels", "blind",
        "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    for r in json(&out).as_array().unwrap() {
        let k = r["k"].as_f64().unwrap();
        let eps = 1e-6;
        assert!((r["ratio"].as_f64().unwrap() - (1.0 + eps) / (k + 1.0 + eps)).abs() < 1e-9);
        assert_eq!(r["chains"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn bounds_disabled_family() {
    let out = run(&["bounds", "--family", "disabled", "--format", "json"]);
    assert_eq!(code(&out), 0);
    for r in json(&out).as_array().unwrap() {
        assert_eq!(r["theoretical_bound"].as_f64(), Some(0.0));
        assert_eq!(r["satisfied"], Value::Bool(true));
    }
}

#[test]
fn pne_lists_equilibria() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "kb.json");
    run(&[
        "gen", "--family", "k_blind", "--n", "4", "--k", "1", "--eps", "0.1", "--delta", "0.01",
        "--out", &file,
    ]);
    let out = run(&["pne", "--instance", &file, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let eq = doc["equilibria"].as_array().unwrap();
    assert!(!eq.is_empty());
    assert!(eq
        .iter()
        .all(|e| e["welfare"].as_f64().unwrap() >= 1.0 - 1e-9));
}

#[test]
fn lll_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "sim.json");
    run(&["gen", "--family", "sim", "--n", "5", "--out", &file]);
    let csv = |name: &str, threads: &str| {
        let out_file = path(&dir, name);
        let out = bin()
            .env("ANARCHY_LAB_THREADS", threads)
            .args([
                "lll",
                "--instance",
                &file,
                "--temps",
                "0.001:10:4(log)",
                "--steps",
                "3000",
                "--trials",
                "3",
                "--seed",
                "5",
                "--out",
                &out_file,
            ])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        std::fs::read(&out_file).unwrap()
    };
    let a = csv("a.csv", "1");
    let b = csv("b.csv", "4");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("temperature,trial,mean_welfare,std_welfare,min_welfare,max_welfare,steps,seed")
    );
    assert_eq!(lines.count(), 12);
}

#[test]
fn lll_accepts_start_profile() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "sim.json");
    run(&["gen", "--family", "sim", "--n", "3", "--out", &file]);
    let start = write(&dir, "start.json", "[[1], [2], [3]]");
    let out = run(&[
        "lll",
        "--instance",
        &file,
        "--temps",
        "0.01",
        "--steps",
        "10",
        "--start",
        &start,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bad = write(&dir, "bad.json", "[[2], [2], [3]]");
    assert_eq!(
        code(&run(&[
            "lll",
            "--instance",
            &file,
            "--temps",
            "0.01",
            "--steps",
            "10",
            "--start",
            &bad
        ])),
        2
    );
}

#[test]
fn search_writes_worst_instance() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"n": 3, "k": 1, "utility": "es", "value_grid": [0, 0.5, 1], "budget": 50, "seed": 1}"#,
    );
    let worst = path(&dir, "worst.json");
    let out = run(&[
        "search", "--config", &cfg, "--out", &worst, "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let game = format::parse(&std::fs::read_to_string(&worst).unwrap()).unwrap();
    assert_eq!(format::parse(&doc["instance"].to_string()).unwrap(), game);
    assert!(
        doc["report"]["ratio"].as_f64().unwrap()
            >= doc["report"]["theoretical_bound"].as_f64().unwrap() - 1e-9
    );
    let again = run(&["search", "--config", &cfg, "--format", "json"]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn malformed_instance_reports_location() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "x.json", "{\n  \"n\": 1,\n  \"resources\": nope\n}");
    let out = run(&["poa", "--instance", &file]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert!(Path::new(&file).exists());
}
