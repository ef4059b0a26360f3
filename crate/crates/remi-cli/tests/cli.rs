//! End-to-end checks of the `remi` binary: exit codes, output files, and
//! reproducibility. Every invocation uses tiny settings so the whole file
//! runs in seconds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn remi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_remi"))
}

fn run(args: &[&str]) -> Output {
    remi().args(args).output().expect("spawn remi")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Small enough to finish quickly, big enough to exercise every stage.
fn tiny_pipeline(dir: &Path, seed: &str) -> Output {
    run(&[
        "pipeline",
        "--env",
        "coffee",
        "--runs",
        "2",
        "--ep-len",
        "10",
        "--iterations",
        "20",
        "--chains",
        "1",
        "--eval-episodes",
        "2",
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ])
}

fn shipped_grid(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../remi/grids").join(name)
}

#[test]
fn demo_reports_triple_count_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "demo",
        "--env",
        "coffee",
        "--runs",
        "3",
        "--ep-len",
        "10",
        "--seed",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("30 triples"));
    let text = std::fs::read_to_string(dir.path().join("demonstration.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.trim().is_empty()).count(), 30 + 3);
}

#[test]
fn missing_source_is_a_usage_error() {
    let out = run(&["demo", "--runs", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("one of --env or --grid"));
}

#[test]
fn env_and_grid_together_are_a_usage_error() {
    let out = run(&["demo", "--env", "coffee", "--grid", "x.grid", "--runs", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mutually exclusive"));
}

#[test]
fn demo_from_grid_lacks_a_true_machine() {
    let grid = shipped_grid("coffee.grid");
    let out = run(&["demo", "--grid", grid.to_str().unwrap(), "--runs", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("true reward machine"));
}

#[test]
fn unreadable_machine_file_is_a_runtime_error() {
    let out = run(&["eval", "--env", "coffee", "--rm", "/nonexistent/x.rm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pipeline_writes_the_full_output_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path(), "1");
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in
        ["demonstration.txt", "inferred.rm", "inferred.dot", "report.txt", "summary.txt", "trace_chain0.csv"]
    {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    assert!(stdout(&out).contains("best score"));

    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    for key in ["r_e=", "r_a=", "episodes=2", "ep_len=10"] {
        assert!(report.contains(key), "report missing {key}: {report}");
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    for key in ["env=coffee", "seed=1", "N=20", "chains=1"] {
        assert!(summary.contains(key), "summary missing {key}: {summary}");
    }

    let trace = std::fs::read_to_string(dir.path().join("trace_chain0.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,loglik,logprior,temperature,perturbance,accepted,best_score"
    );
    assert_eq!(lines.count(), 20);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(tiny_pipeline(a.path(), "7").status.success());
    assert!(tiny_pipeline(b.path(), "7").status.success());
    for name in ["demonstration.txt", "inferred.rm", "trace_chain0.csv", "report.txt"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
}

#[test]
fn different_seeds_give_different_demonstrations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(tiny_pipeline(a.path(), "7").status.success());
    assert!(tiny_pipeline(b.path(), "8").status.success());
    let x = std::fs::read(a.path().join("demonstration.txt")).unwrap();
    let y = std::fs::read(b.path().join("demonstration.txt")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn infer_consumes_a_demo_file_and_grids_work_as_source() {
    let dir = tempfile::tempdir().unwrap();
    let demo_out = run(&[
        "demo",
        "--env",
        "coffee",
        "--runs",
        "2",
        "--ep-len",
        "8",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(demo_out.status.success());
    let demo_path = dir.path().join("demonstration.txt");

    // Inference does not need the true machine, so a bare grid suffices.
    let grid = shipped_grid("coffee.grid");
    let out = run(&[
        "infer",
        "--demo",
        demo_path.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--iterations",
        "15",
        "--chains",
        "1",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let rm = std::fs::read_to_string(dir.path().join("inferred.rm")).unwrap();
    assert!(remi::RewardMachine::from_json(&rm).unwrap().is_valid());
}

#[test]
fn config_file_fills_gaps_but_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "env=coffee\nruns=2\nep-len=10\niterations=20\nchains=1\nseed=5\neval-episodes=2\n").unwrap();
    let out = run(&[
        "pipeline",
        "--config",
        conf.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("seed=9"), "flag should beat config: {summary}");
    assert!(summary.contains("runs=2"), "config should fill runs: {summary}");
}

#[test]
fn export_dot_renders_a_machine() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tiny_pipeline(dir.path(), "2").status.success());
    let rm = dir.path().join("inferred.rm");
    let out = run(&["export-dot", "--rm", rm.to_str().unwrap()]);
    assert!(out.status.success());
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches('{').count(), dot.matches('}').count());
    assert!(dot.contains("->"));
    let disk = std::fs::read_to_string(dir.path().join("inferred.dot")).unwrap();
    assert_eq!(dot, disk);
}
