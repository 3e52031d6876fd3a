use std::fs;
use std::process::{Command, Output};

use tempfile::tempdir;

fn tgsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgsim")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn stats_row_for_plain1n() {
    assert_eq!(stdout(&tgsim(&["stats", "plain1n"])), "380,0,0.00,1\n");
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "crossv", "--cluster", "8x4", "--bandwidth", "32", "--scheduler", "ws", "--seed", "3"];
    let a = stdout(&tgsim(&args));
    assert!(a.starts_with("makespan_s="));
    assert_eq!(a, stdout(&tgsim(&args)));
}

#[test]
fn simulate_writes_a_trace() {
    let dir = tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    stdout(&tgsim(&["simulate", "fork1", "--scheduler", "blevel-gt", "--trace", trace.to_str().unwrap()]));
    let text = fs::read_to_string(trace).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["event"], "scheduler_invoked");
    assert!(text.lines().any(|l| l.contains("\"task_finished\"")));
}

#[test]
fn unknown_scheduler_is_a_usage_error() {
    let out = tgsim(&["simulate", "plain1n", "--scheduler", "heft"]);
    assert!(!out.status.success());

    let dir = tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{"graphs":[{"name":"plain1n"}],"clusters":["8x4"],"bandwidths_mibs":[32],"schedulers":["heft"]}"#,
    )
    .unwrap();
    let out = tgsim(&["bench", plan.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("heft"));
}

#[test]
fn bad_cluster_is_rejected() {
    assert!(!tgsim(&["simulate", "plain1n", "--cluster", "0x4"]).status.success());
}

#[test]
fn generate_writes_files() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("graphs");
    stdout(&tgsim(&["generate", "irw", "--seed", "2", "--out", out.to_str().unwrap()]));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["crossv", "crossvx", "fastcrossv", "gridcat", "mapreduce", "nestedcrossv"].map(|n| format!("{n}.json"))
    );
    let row = stdout(&tgsim(&["stats", out.join("crossv.json").to_str().unwrap()]));
    assert_eq!(row.trim(), stdout(&tgsim(&["stats", "crossv", "--seed", "2"])).trim());
}

#[test]
fn bench_then_normalize() {
    let dir = tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{
            "graphs": [{"name": "merge_triplets"}],
            "clusters": ["8x4"],
            "bandwidths_mibs": [32, 256],
            "schedulers": ["ws", "single"],
            "netmodels": ["maxmin", "simple"],
            "repetitions": 2,
            "seed": 4
        }"#,
    )
    .unwrap();
    let csv = dir.path().join("r.csv");
    stdout(&tgsim(&["bench", plan.to_str().unwrap(), "-o", csv.to_str().unwrap()]));
    let first = fs::read(&csv).unwrap();
    stdout(&tgsim(&["bench", plan.to_str().unwrap(), "-o", csv.to_str().unwrap(), "--threads", "1"]));
    assert_eq!(first, fs::read(&csv).unwrap());

    let text = String::from_utf8(first).unwrap();
    // 2 bandwidths x 2 netmodels x (2 ws reps + 1 single run)
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);

    let scored = stdout(&tgsim(&["normalize", csv.to_str().unwrap(), "--reference", "netmodel=simple"]));
    let mut lines = scored.lines();
    assert!(lines.next().unwrap().ends_with(",score"));
    for line in lines {
        let score: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(score > 0.0);
        if line.contains(",single,") {
            assert_eq!(score, 1.0);
        }
    }

    let out = tgsim(&["normalize", csv.to_str().unwrap(), "--reference", "msd=0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no reference"));
}
