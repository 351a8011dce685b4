//! The shipped fixture corpus itself: every model validates, every
//! scenario runs green, and the model serializer round-trips the fixtures
//! without drift.

mod common;

use common::fixture;
use dcrwatch::model::{load_model, parse_model, serialize_model, validate_model};
use dcrwatch::scenario::run_scenario;

fn scenario(rel: &str) {
    let outcome = run_scenario(fixture(&format!("scenarios/{rel}")))
        .unwrap_or_else(|e| panic!("{rel}: {e}"));
    assert!(outcome.steps_run > 0, "{rel} has no steps");
}

#[test]
fn access_control_roles() {
    scenario("access_control_roles.json");
}

#[test]
fn auto_deprecation_guard() {
    scenario("auto_deprecation_guard.json");
}

#[test]
fn casino_round_trip() {
    scenario("casino_round_trip.json");
}

#[test]
fn casino_timeout() {
    scenario("casino_timeout.json");
}

#[test]
fn circuit_breaker_flow() {
    scenario("circuit_breaker_flow.json");
}

#[test]
fn commit_reveal_order() {
    scenario("commit_reveal_order.json");
}

#[test]
fn escrow_happy_path() {
    scenario("escrow_happy_path.json");
}

#[test]
fn escrow_refuses_early() {
    scenario("escrow_refuses_early.json");
}

#[test]
fn escrow_trace_clean() {
    scenario("escrow_trace_clean.json");
}

#[test]
fn escrow_trace_violation() {
    scenario("escrow_trace_violation.json");
}

#[test]
fn speed_bump_wait() {
    scenario("speed_bump_wait.json");
}

#[test]
fn time_constraint_vesting() {
    scenario("time_constraint_vesting.json");
}

#[test]
fn no_scenario_file_is_left_out() {
    let dir = fixture("scenarios");
    let mut found: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    found.sort();
    let covered = [
        "access_control_roles.json",
        "auto_deprecation_guard.json",
        "casino_round_trip.json",
        "casino_timeout.json",
        "circuit_breaker_flow.json",
        "commit_reveal_order.json",
        "escrow_happy_path.json",
        "escrow_refuses_early.json",
        "escrow_trace_clean.json",
        "escrow_trace_violation.json",
        "speed_bump_wait.json",
        "time_constraint_vesting.json",
    ];
    assert_eq!(found, covered, "a scenario fixture has no matching test");
}

#[test]
fn every_fixture_model_validates_clean() {
    let dir = fixture("models");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let doc = load_model(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let diagnostics = validate_model(&doc);
        assert!(diagnostics.is_empty(), "{}: {diagnostics:?}", path.display());
        seen += 1;
    }
    assert_eq!(seen, 8, "fixture model count moved; update the corpus tests");
}

#[test]
fn model_serialization_is_a_fixed_point() {
    let dir = fixture("models");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let doc = load_model(&path).unwrap();
        let once = serialize_model(&doc);
        let reparsed = parse_model(&once).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(reparsed, doc, "{} drifts through serialization", path.display());
        assert_eq!(serialize_model(&reparsed), once, "{} is not a fixed point", path.display());
    }
}
