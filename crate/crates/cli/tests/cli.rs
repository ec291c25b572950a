use std::path::Path;
use std::process::{Command, Output};

fn detmec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detmec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = detmec(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_schedule_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenario.json");
    let plan = dir.path().join("plan.json");
    let traces = dir.path().join("traces.csv");
    ok(&["generate", "--profile=tiny", "--seed=3", "-o", s(&scen)]);
    ok(&["schedule", s(&scen), "--solver=tabu", "--H=4", "-o", s(&plan)]);
    ok(&["simulate", s(&scen), s(&plan), "--hypercycles=4", "--mode=det", "-o", s(&traces)]);
    let csv = std::fs::read_to_string(&traces).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("mode,utilization,demand,hypercycle,hop,"));
    assert!(lines.all(|l| l.starts_with("det,")));

    let be = ok(&["simulate", s(&scen), s(&plan), "--hypercycles=2", "--mode=besteffort", "--utilization=0.3"]);
    assert!(be.lines().skip(1).all(|l| l.starts_with("besteffort,0.3,")));
}

#[test]
fn oracle_matches_tabu_on_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("t.json");
    ok(&["generate", "--profile=tiny", "--seed=8", "-o", s(&scen)]);
    let objective = |solver: &str| {
        let plan = ok(&["schedule", s(&scen), &format!("--solver={solver}")]);
        let v: serde_json::Value = serde_json::from_str(&plan).unwrap();
        v["objective"].as_u64().unwrap()
    };
    assert_eq!(objective("tabu"), objective("oracle"));
    assert!(objective("spf") <= objective("oracle"));
    assert!(objective("noshape") <= objective("oracle"));
}

#[test]
fn compare_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("t.json");
    ok(&["generate", "--profile=tiny", "--seed=12", "-o", s(&scen)]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["compare", s(&scen), "--hypercycles=6", "--utilizations=0.2,0.6", "-o", s(&out)]);
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    let json = ok(&["compare", s(&scen), "--hypercycles=2", "--format=json"]);
    assert!(json.contains("\"config_hash\""));
}

#[test]
fn sweep_over_hops() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("t.json");
    ok(&["generate", "--profile=tiny", "--seed=2", "-o", s(&scen)]);
    let csv = ok(&["sweep", s(&scen), "--param=H", "--range=2..4"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "param,value,solver,demands,objective,total_bound_ns");
    assert_eq!(rows.len(), 1 + 9);
    let demands = ok(&["sweep", s(&scen), "--param=demands", "--range=1..2"]);
    assert_eq!(demands.lines().count(), 1 + 6);
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("t.json");
    ok(&["generate", "--profile=tiny", "--seed=1", "-o", s(&scen)]);
    let text = std::fs::read_to_string(&scen).unwrap();

    let bad = dir.path().join("unknown.json");
    std::fs::write(&bad, text.replacen("\"hop_bound\"", "\"hops\"", 1)).unwrap();
    assert_eq!(detmec(&["schedule", s(&bad)]).status.code(), Some(2));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["demands"][0]["deadline_ns"] = 0.into();
    let bad = dir.path().join("deadline.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = detmec(&["schedule", s(&bad)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oversize_oracle_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("p.json");
    ok(&["generate", "--profile=paper-like", "--seed=1", "-o", s(&scen)]);
    assert_eq!(detmec(&["schedule", s(&scen), "--solver=oracle"]).status.code(), Some(3));
}

#[test]
fn missing_file_is_a_plain_failure() {
    let out = detmec(&["schedule", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(1));
}
