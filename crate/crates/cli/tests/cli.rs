use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pacing_cli::io::{load_instance, InstanceFile};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn pacing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacing")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn fppe_on_crossed_items_gives_half_prices_and_identity() {
    let out = pacing(&["fppe", path_str(&data("crossed_items.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    let o = &r["result"]["outcome"];
    for j in 0..2 {
        assert!((o["prices"][j].as_f64().unwrap() - 0.5).abs() < 1e-8);
        for i in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((o["allocation"][i][j].as_f64().unwrap() - want).abs() < 1e-8);
        }
    }
    assert_eq!(r["passed"], Value::Bool(true));
}

#[test]
fn fppe_iterative_path_agrees() {
    let out = pacing(&["fppe", path_str(&data("crossed_items.json")), "--path", "iterative"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["result"]["outcome"]["path"], "iterative");
    assert!((r["result"]["outcome"]["prices"][1].as_f64().unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn runner_up_profile_verifies() {
    let out = pacing(&[
        "verify-nash",
        path_str(&data("two_linear.json")),
        "--profile",
        path_str(&data("runner_up_profile.json")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    assert_eq!(r["result"]["is_eps_nash"], Value::Bool(true));
}

#[test]
fn best_response_of_high_bidder_is_runner_up_value() {
    let out = pacing(&[
        "best-response",
        path_str(&data("two_linear.json")),
        "--profile",
        path_str(&data("runner_up_profile.json")),
        "--agent",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    let w = r["result"]["best"]["message"]["budget"].as_f64().unwrap();
    assert!((w - 0.7).abs() < 1e-6, "best budget {w}");
}

#[test]
fn welfare_of_split_allocation_is_199() {
    let out = pacing(&[
        "welfare",
        path_str(&data("capped_winner.json")),
        "--allocation",
        path_str(&data("capped_winner_split.json")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let w = json_of(&out)["result"]["liquid_welfare"].as_f64().unwrap();
    assert!((w - 1.99).abs() < 1e-12, "welfare {w}");
}

#[test]
fn optimal_welfare_and_poa_of_capped_winner() {
    let out = pacing(&["welfare", path_str(&data("capped_winner.json"))]);
    assert!((json_of(&out)["result"]["value"].as_f64().unwrap() - 1.99).abs() < 1e-6);
    let out = pacing(&["poa", path_str(&data("capped_winner.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json_of(&out)["result"]["poa"]["ratio"].as_f64().unwrap() - 1.99).abs() < 1e-6);
}

#[test]
fn solve_nash_constructs_single_item_equilibria() {
    let out = pacing(&["solve-nash", path_str(&data("mixed_preferences.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert!(!r["result"]["equilibria"].as_array().unwrap().is_empty());
    assert_eq!(r["seed"], 7);
}

#[test]
fn solve_nash_grid_search_on_crossed_items_finds_nothing() {
    let out = pacing(&["solve-nash", path_str(&data("crossed_items.json")), "--grid", "default", "--eps", "0.001"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert!(r["result"]["equilibria"].as_array().unwrap().is_empty());
    assert!(r["result"]["closest"]["max_gain"].as_f64().unwrap() > 0.0);
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"agents": [
            {"valuation": {"kind": "linear", "v": 1.0}, "money_cost": {"kind": "identity"}, "budget": "inf"},
            {"valuation": {"kind": "linear", "v": 0.6}, "money_cost": {"kind": "identity"}, "budget": "inf"}],
           "ctr": [[1.0], [1.0]]}"#,
    );
    let share = 0.6 / 1.6f64.powi(2);
    let profile = write(
        dir.path(),
        "profile.json",
        &format!(r#"[{{"value": 1.0, "budget": {share}}}, {{"value": 0.6, "budget": {}}}]"#, share * 0.6),
    );
    let out = pacing(&["verify-nash", path_str(&inst), "--profile", path_str(&profile)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["passed"], Value::Bool(false));
}

#[test]
fn schema_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"agents": [
            {"valuation": {"kind": "linear", "v": 1.0}, "money_cost": {"kind": "identity"}, "budget": 1.0},
            {"valuation": {"kind": "linear", "v": 1.0}, "money_cost": {"kind": "identity"}, "budget": "Infinity"}],
           "ctr": [[1.0], [1.0]]}"#,
    );
    let out = pacing(&["fppe", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("agents[1].budget"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_fields_and_double_infinity_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let extra = write(dir.path(), "extra.json", r#"{"agents": [], "ctr": [], "colour": 1}"#);
    let out = pacing(&["fppe", path_str(&extra)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let profile = write(dir.path(), "p.json", r#"[{"value": "inf", "budget": "inf"}, {"value": 1, "budget": 1}]"#);
    let out = pacing(&["fppe", path_str(&data("two_linear.json")), "--profile", path_str(&profile)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_instances_and_usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(
        dir.path(),
        "ragged.json",
        r#"{"agents": [{"valuation": {"kind": "linear", "v": 1.0}, "money_cost": {"kind": "identity"}, "budget": 1.0}],
           "ctr": [[1.0], [1.0]]}"#,
    );
    assert_eq!(pacing(&["fppe", path_str(&ragged)]).status.code(), Some(2));
    assert_eq!(pacing(&["fppe", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(pacing(&["scenario", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(pacing(&["scenario", "table1", "bogus=1"]).status.code(), Some(2));
    assert_eq!(pacing(&["scenario", "poa_lower_bound", "K=abc"]).status.code(), Some(2));
    assert_eq!(pacing(&["fppe"]).status.code(), Some(2));
    let mixed = path_str(&data("mixed_preferences.json")).to_string();
    assert_eq!(pacing(&["fppe", &mixed]).status.code(), Some(2), "non-linear agents need an explicit profile");
}

#[test]
fn sweep_reports_are_byte_identical_across_runs_and_pool_sizes() {
    let args = ["scenario", "single_item_nash_sweep", "count=12", "--seed", "5"];
    let a = pacing(&[&args[..], &["--jobs", "1"]].concat());
    let b = pacing(&[&args[..], &["--jobs", "4"]].concat());
    let c = pacing(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let other = pacing(&["scenario", "single_item_nash_sweep", "count=12", "--seed", "6"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn sweep_csv_has_one_row_per_instance() {
    let out = pacing(&["scenario", "budget_monotonicity_sweep", "count=15", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let headers = rdr.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "min_price_delta"));
    assert_eq!(rdr.records().count(), 15);
}

#[test]
fn every_registered_scenario_passes_at_small_size() {
    let list = json_of(&pacing(&["scenarios"]));
    let names: Vec<String> = list["result"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap().to_string()).collect();
    assert_eq!(names.len(), 9);
    for name in &names {
        let mut args = vec!["scenario", name.as_str()];
        if list["result"].as_array().unwrap().iter().any(|s| s["name"] == name.as_str() && s["params"].get("count").is_some()) {
            args.push("count=10");
        }
        let out = pacing(&args);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        let r = json_of(&out);
        assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true && c["provenance"].is_string()));
    }
}

#[test]
fn proportional_split_scenario_tracks_existence_boundary() {
    for (v2, exists) in [(0.7, true), (0.62, true), (0.6, false)] {
        let out = pacing(&["scenario", "linear_inefficient", &format!("v2={v2}")]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json_of(&out)["result"]["nash"]["is_eps_nash"], Value::Bool(exists), "v2 = {v2}");
    }
}

#[test]
fn timing_is_opt_in() {
    let plain = json_of(&pacing(&["scenario", "table1"]));
    assert!(plain.get("wall_clock_ms").is_none());
    let timed = json_of(&pacing(&["scenario", "table1", "--timing"]));
    assert!(timed["wall_clock_ms"].as_f64().unwrap() >= 0.0);
}

fn normalize(v: &Value) -> Value {
    match v {
        Value::Number(n) => serde_json::json!(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), normalize(v))).collect()),
        other => other.clone(),
    }
}

#[test]
fn instance_files_round_trip() {
    for name in ["crossed_items.json", "two_linear.json", "capped_winner.json", "mixed_preferences.json"] {
        let path = data(name);
        let text = std::fs::read_to_string(&path).unwrap();
        let original: Value = serde_json::from_str(&text).unwrap();
        let (instance, seed) = load_instance(&path).unwrap();
        let written = serde_json::to_value(InstanceFile::from_instance(&instance, seed)).unwrap();
        assert_eq!(normalize(&original), normalize(&written), "{name}");
    }
}
