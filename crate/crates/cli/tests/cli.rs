use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use agentsynth::trajectory::{filter_trajectory, FilterOptions, FilterReport};
use agentsynth_cli::io::{read_jsonl, FileKind, Metadata, TrajectoryRecord};
use serde_json::Value;

fn agentsynth(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agentsynth"))
        .current_dir(dir)
        .args(args)
        .env_remove("AGENTSYNTH_TEST_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = agentsynth(dir, args);
    assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    stdout(&out)
}

fn first_line(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = ok(d, &["gen-instances", "--out", "i.jsonl"]);
    assert!(gen.contains("unique instances: 400 of 400"), "{gen}");
    assert_eq!(fs::read_to_string(d.join("i.jsonl")).unwrap().lines().count(), 401);

    let explore = ok(d, &["explore", "--instances", "i.jsonl", "--out", "t.jsonl", "--report", "r.jsonl", "--parallelism", "4"]);
    assert!(explore.contains("accepted: 500"), "{explore}");
    let filtered = ok(d, &["filter", "--trajectories", "t.jsonl", "--instances", "i.jsonl", "--out", "f.jsonl"]);
    assert!(filtered.contains("pass_rate: 1.000"), "{filtered}");
    let export = ok(d, &["export", "--trajectories", "f.jsonl", "--instances", "i.jsonl", "--out", "data/train.jsonl"]);
    assert!(export.contains("exported 500"), "{export}");

    let dataset = fs::read_to_string(d.join("data/train.jsonl")).unwrap();
    assert_eq!(dataset.lines().count(), 500);
    let record: Value = serde_json::from_str(dataset.lines().next().unwrap()).unwrap();
    let roles: Vec<&str> = record["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(&roles[..2], ["system", "user"]);
    assert_eq!(roles.last(), Some(&"tool"));
    let sidecar = first_line(&d.join("data/train.jsonl.meta.json"));
    assert_eq!(sidecar["kind"], "dataset");

    for file in ["i.jsonl", "t.jsonl", "r.jsonl", "f.jsonl"] {
        let meta = first_line(&d.join(file));
        assert_eq!(meta["record_type"], "metadata", "{file}");
        assert_eq!(meta["seed"], 0);
        assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    }

    let stats = ok(d, &["stats", "--trajectories", "t.jsonl", "f.jsonl"]);
    let rows: Vec<Vec<&str>> = stats.lines().skip(2).take(2).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows[0], ["t", "0.00", "0", "0", "0", "0"]);
    assert_eq!(rows[1][0], "f");
    let json: Value = serde_json::from_str(&ok(d, &["stats", "--trajectories", "t.jsonl", "--json"])).unwrap();
    assert_eq!(json[0]["stats"]["per_layer"]["structure"], 0);
}

#[test]
fn report_replays_from_trajectory_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "60", "--out", "i.jsonl"]);
    ok(d, &["explore", "--instances", "i.jsonl", "--agent", "faulty", "--fault-rate", "0.5", "--target-accepted", "40", "--out", "t.jsonl", "--report", "r.jsonl"]);
    let (_, instances): (Metadata, Vec<agentsynth::query_gen::QueryInstance>) = read_jsonl(&d.join("i.jsonl"), FileKind::Instances).unwrap();
    let (_, records): (Metadata, Vec<TrajectoryRecord>) = read_jsonl(&d.join("t.jsonl"), FileKind::Trajectories).unwrap();
    let (_, stored): (Metadata, Vec<FilterReport>) = read_jsonl(&d.join("r.jsonl"), FileKind::Report).unwrap();
    let replayed = FilterReport::from_verdicts(records.iter().map(|r| {
        let inst = instances.iter().find(|i| i.instance_id == r.trajectory.instance_id).unwrap();
        let v = filter_trajectory(&r.trajectory, inst, FilterOptions::default()).unwrap();
        assert_eq!(v, r.verdict);
        v
    }));
    assert_eq!(stored, vec![replayed]);
}

#[test]
fn rerunning_from_metadata_reproduces_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "50", "--seed", "3", "--out", "i.jsonl"]);
    ok(d, &["--config", "i.jsonl", "gen-instances", "--out", "i2.jsonl"]);
    assert_eq!(fs::read(d.join("i.jsonl")).unwrap(), fs::read(d.join("i2.jsonl")).unwrap());

    ok(d, &["explore", "--instances", "i.jsonl", "--agent", "faulty", "--target-accepted", "30", "--out", "t.jsonl"]);
    ok(d, &["explore", "--config", "t.jsonl", "--out", "t2.jsonl"]);
    assert_eq!(fs::read(d.join("t.jsonl")).unwrap(), fs::read(d.join("t2.jsonl")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.toml"), "seed = 3\ncount = 12\nmax_steps = 6\n").unwrap();
    ok(d, &["gen-instances", "--config", "run.toml", "--seed", "4", "--out", "i.jsonl"]);
    let meta = first_line(&d.join("i.jsonl"));
    assert_eq!(meta["seed"], 4);
    assert_eq!(meta["config"]["count"], 12);
    assert_eq!(meta["config"]["max_steps"], 6);
    assert_eq!(fs::read_to_string(d.join("i.jsonl")).unwrap().lines().count(), 13);
}

#[test]
fn action_monitoring_ablation_strips_layers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "30", "--out", "i.jsonl"]);
    ok(d, &["explore", "--instances", "i.jsonl", "--agent", "faulty", "--fault-rate", "0.6", "--target-accepted", "30", "--no-action-monitoring", "--out", "t.jsonl"]);
    let meta = first_line(&d.join("t.jsonl"));
    assert_eq!(meta["config"]["action_monitoring"], false);
    let (_, records): (Metadata, Vec<TrajectoryRecord>) = read_jsonl(&d.join("t.jsonl"), FileKind::Trajectories).unwrap();
    let errors: Vec<_> = records.iter().flat_map(|r| &r.trajectory.steps).filter(|s| s.is_error).collect();
    assert!(!errors.is_empty());
    assert!(errors.iter().all(|s| s.error_layer.is_none() && !s.observation.starts_with("ERROR[")));
    let stats = ok(d, &["stats", "--trajectories", "t.jsonl"]);
    assert!(stats.contains(&format!("{} unclassified", errors.len())), "{stats}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = agentsynth(d, &["gen-instances", "--count", "0", "--out", "i.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("i.jsonl").exists());
    assert_eq!(agentsynth(d, &["gen-instances", "--bogus"]).status.code(), Some(2));
    assert_eq!(agentsynth(d, &["gen-instances"]).status.code(), Some(2));
    assert_eq!(agentsynth(d, &["explore", "--out", "t.jsonl"]).status.code(), Some(2));
    assert_eq!(agentsynth(d, &["filter", "--match-mode", "fuzzy"]).status.code(), Some(2));
}

#[test]
fn remote_agent_needs_credentials_before_any_request() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "5", "--out", "i.jsonl"]);
    // Port 9 is discard; a request would fail differently (or hang).
    let out = agentsynth(
        d,
        &["explore", "--instances", "i.jsonl", "--agent", "remote", "--api-key-env", "AGENTSYNTH_TEST_KEY", "--endpoint", "http://127.0.0.1:9", "--out", "t.jsonl"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("AGENTSYNTH_TEST_KEY is not set"), "{}", stderr(&out));
    assert!(!d.join("t.jsonl").exists());
}

#[test]
fn unreachable_target_fails_but_keeps_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "10", "--out", "i.jsonl"]);
    fs::write(d.join("script.json"), r#"["{\"tool_name\": \"Finish\", \"arguments\": {\"final_answer\": \"no idea\"}}"]"#).unwrap();
    let out = agentsynth(d, &["explore", "--instances", "i.jsonl", "--agent", "scripted", "--script", "script.json", "--target-accepted", "2", "--attempt-budget", "6", "--out", "t.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("accepted 0 of 2"), "{}", stderr(&out));
    let (_, records): (Metadata, Vec<TrajectoryRecord>) = read_jsonl(&d.join("t.jsonl"), FileKind::Trajectories).unwrap();
    assert_eq!(records.len(), 6);

    let filtered = ok(d, &["filter", "--trajectories", "t.jsonl", "--instances", "i.jsonl", "--out", "f.jsonl"]);
    assert!(filtered.contains("answer_mismatch   6"), "{filtered}");
    let out = agentsynth(d, &["export", "--trajectories", "f.jsonl", "--instances", "i.jsonl", "--out", "d.jsonl"]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("warning: no accepted trajectories"));
    assert_eq!(fs::read_to_string(d.join("d.jsonl")).unwrap(), "");
}

#[test]
fn malformed_lines_report_their_number() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "5", "--out", "i.jsonl"]);
    let mut text = fs::read_to_string(d.join("i.jsonl")).unwrap();
    text.push_str("{not json\n");
    fs::write(d.join("bad.jsonl"), text).unwrap();
    let out = agentsynth(d, &["explore", "--instances", "bad.jsonl", "--out", "t.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.jsonl:7:"), "{}", stderr(&out));
}

#[test]
fn mismatched_fixtures_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-instances", "--count", "5", "--out", "i.jsonl"]);
    let out = agentsynth(d, &["explore", "--instances", "i.jsonl", "--fixture-seed", "7", "--out", "t.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("different fixtures"));
}

#[test]
fn catalog_lists_tools() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["catalog"]);
    assert!(text.contains("Finish(final_answer: text) [terminal]"), "{text}");
    assert!(text.trim_end().ends_with("57 tools"));
}
