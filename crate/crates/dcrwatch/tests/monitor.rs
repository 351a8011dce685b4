//! Monitor pipeline tests: translation policies, alert ordering, filter
//! behavior, and determinism, all on purpose-built tiny models so each
//! test reads as a self-contained story.

mod common;

use common::fixture;
use dcrwatch::model::{load_model, parse_model, ModelDocument};
use dcrwatch::monitor::{
    load_mapping, parse_mapping, run_monitor, run_monitor_on, translate, Alert, MappingConfig,
    Translated,
};
use dcrwatch::trace::{read_trace, TraceSource, Transaction, TxStatus};
use dcrwatch::Value;
use num_bigint::BigInt;

const CONTRACT: &str = "0x00000000000000000000000000000000000000c1";
const CALLER: &str = "0x00000000000000000000000000000000000000e1";
const STRANGER: &str = "0x00000000000000000000000000000000000000e2";

/// ping is an input event fed by `poke(uint256)`; executing it starts a
/// 10-tick countdown for pong, fed by `settle()` but owned by another role.
fn model() -> ModelDocument {
    parse_model(
        &serde_json::json!({
            "name": "ping_pong",
            "roles": ["caller", "operator"],
            "events": [
                { "id": "ping", "roles": ["caller"], "kind": "input" },
                { "id": "pong", "roles": ["operator"] }
            ],
            "relations": [
                { "kind": "response", "source": "ping", "target": "pong", "deadline": "10" }
            ],
            "initial": { "included": ["ping", "pong"] }
        })
        .to_string(),
    )
    .expect("model parses")
}

fn mapping(policies: serde_json::Value) -> MappingConfig {
    let doc = serde_json::json!({
        "contract": CONTRACT,
        "functions": [
            { "signature": "poke(uint256)", "event": "ping", "bind": { "arg": 0 } },
            { "signature": "settle()", "event": "pong" }
        ],
        "roles": { CALLER: "caller" },
        "policies": policies
    });
    parse_mapping(&doc.to_string()).expect("mapping parses")
}

fn poke_calldata(n: u64) -> Vec<u8> {
    let sig: dcrwatch::abi::FunctionSig = "poke(uint256)".parse().unwrap();
    dcrwatch::abi::encode_calldata(&sig, &[Value::Int(BigInt::from(n))]).unwrap()
}

fn settle_calldata() -> Vec<u8> {
    let sig: dcrwatch::abi::FunctionSig = "settle()".parse().unwrap();
    dcrwatch::abi::encode_calldata(&sig, &[]).unwrap()
}

fn tx(block: u64, timestamp: u64, from: &str, input: Vec<u8>) -> Transaction {
    Transaction {
        block_number: block,
        tx_index: 0,
        hash: format!("0x{block:064x}"),
        from: from.to_string(),
        to: Some(CONTRACT.to_string()),
        input,
        value: BigInt::from(0u8),
        status: TxStatus::Success,
        timestamp,
    }
}

fn collect(
    document: &ModelDocument,
    config: &MappingConfig,
    txs: Vec<Transaction>,
) -> (dcrwatch::monitor::MonitorSummary, Vec<Alert>, dcrwatch::Marking) {
    let mut instance = document.instantiate().expect("instantiates");
    let mut alerts = Vec::new();
    let summary = run_monitor_on(
        &mut instance,
        TraceSource::from_vec(txs),
        config,
        |alert| alerts.push(alert.clone()),
    )
    .expect("replay runs");
    (summary, alerts, instance.marking().clone())
}

#[test]
fn reverted_transactions_never_touch_the_marking() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    let (_, _, after_one) = collect(&document, &config, vec![tx(1, 100, CALLER, poke_calldata(7))]);

    let mut reverted = tx(2, 100, CALLER, poke_calldata(8));
    reverted.status = TxStatus::Reverted;
    let (summary, alerts, after_two) = collect(
        &document,
        &config,
        vec![tx(1, 100, CALLER, poke_calldata(7)), reverted],
    );

    assert_eq!(summary.skipped_reverted, 1);
    assert_eq!(summary.steps_executed, 1);
    assert!(alerts.is_empty());
    assert_eq!(after_one, after_two);
    assert_eq!(after_two.values[&"ping".into()], Value::Int(BigInt::from(7)));
}

#[test]
fn overdue_deadlines_are_reported_before_the_transaction_that_reveals_them() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    // First poke arms pong's 10-tick deadline; the second arrives 20
    // ticks later, so the lapse is discovered while catching up the
    // clock, before the second poke itself is replayed.
    let (summary, alerts, _) = collect(
        &document,
        &config,
        vec![
            tx(1, 100, CALLER, poke_calldata(1)),
            tx(2, 120, CALLER, poke_calldata(2)),
        ],
    );

    assert_eq!(summary.steps_executed, 2);
    assert_eq!(summary.alerts.deadline_overdue, 1);
    assert_eq!(alerts.len(), 1);
    let alert = &alerts[0];
    assert_eq!(alert.kind.name(), "deadline_overdue");
    assert_eq!(alert.provenance.block_number, 2, "blamed on the revealing transaction");
    let rendered = serde_json::to_value(alert).unwrap();
    assert_eq!(rendered["event"], "pong");
    assert_eq!(rendered["missed_by"], 10);
    assert_eq!(summary.diverged_at.as_ref().unwrap().block_number, 2);
}

#[test]
fn ignore_time_policy_leaves_deadlines_alone() {
    let document = model();
    let config = mapping(serde_json::json!({ "time": "ignore_time" }));

    let (summary, alerts, marking) = collect(
        &document,
        &config,
        vec![
            tx(1, 100, CALLER, poke_calldata(1)),
            tx(2, 1_000_000, CALLER, poke_calldata(2)),
        ],
    );

    assert_eq!(summary.alerts.deadline_overdue, 0);
    assert!(alerts.is_empty());
    assert_eq!(
        marking.pending[&"pong".into()],
        dcrwatch::Deadline::Finite(10),
        "deadline untouched because the wall clock is ignored"
    );
}

#[test]
fn unknown_sender_is_rejected_or_given_the_default_role() {
    let document = model();

    let reject = mapping(serde_json::json!({}));
    let (summary, alerts, _) =
        collect(&document, &reject, vec![tx(1, 100, STRANGER, poke_calldata(1))]);
    assert_eq!(summary.steps_executed, 0);
    assert_eq!(summary.alerts.role_violation, 1);
    let rendered = serde_json::to_value(&alerts[0]).unwrap();
    assert_eq!(rendered["type"], "role_violation");
    assert_eq!(rendered["sender"], STRANGER);

    let lenient = mapping(serde_json::json!({ "unknown_sender": { "default_role": "caller" } }));
    let (summary, alerts, _) =
        collect(&document, &lenient, vec![tx(1, 100, STRANGER, poke_calldata(1))]);
    assert_eq!(summary.steps_executed, 1);
    assert!(alerts.is_empty());
}

#[test]
fn sender_with_a_mapped_but_wrong_role_trips_a_step_violation() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    // CALLER maps to role caller, but pong belongs to operator.
    let (summary, alerts, _) =
        collect(&document, &config, vec![tx(1, 100, CALLER, settle_calldata())]);

    assert_eq!(summary.steps_executed, 0);
    assert_eq!(summary.alerts.step_violation, 1);
    let rendered = serde_json::to_value(&alerts[0]).unwrap();
    assert_eq!(rendered["type"], "step_violation");
    assert_eq!(rendered["event"], "pong");
    assert_eq!(
        rendered["verdict"]["blockers"][0]["reason"], "role_denied",
        "full verdict travels with the alert: {rendered}"
    );
}

#[test]
fn unmapped_selectors_skip_or_alert_per_strictness() {
    let document = model();
    let foreign = hex::decode("deadbeef").unwrap();

    let lenient = mapping(serde_json::json!({}));
    let (summary, alerts, _) =
        collect(&document, &lenient, vec![tx(1, 100, CALLER, foreign.clone())]);
    assert_eq!(summary.skipped_unmapped, 1);
    assert!(alerts.is_empty());

    let strict = mapping(serde_json::json!({ "strict_unmapped": true }));
    let (summary, alerts, _) = collect(&document, &strict, vec![tx(1, 100, CALLER, foreign)]);
    assert_eq!(summary.alerts.unmapped_function, 1);
    let rendered = serde_json::to_value(&alerts[0]).unwrap();
    assert_eq!(rendered["type"], "unmapped_function");
    assert_eq!(rendered["selector"], "0xdeadbeef");
}

#[test]
fn malformed_calldata_becomes_a_decode_alert() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    let (summary, alerts, _) = collect(
        &document,
        &config,
        vec![
            tx(1, 100, CALLER, vec![0xd1, 0xe3]),
            tx(2, 100, CALLER, poke_calldata(1)[..20].to_vec()),
            tx(3, 100, CALLER, Vec::new()),
        ],
    );

    assert_eq!(summary.alerts.decode_error, 2, "short selector and truncated words");
    assert_eq!(summary.skipped_empty, 1, "empty calldata is a plain transfer, not a call");
    assert_eq!(summary.steps_executed, 0);
    assert!(alerts.iter().all(|a| a.kind.name() == "decode_error"));
}

#[test]
fn transactions_to_other_contracts_are_invisible() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    let mut elsewhere = tx(1, 90, CALLER, poke_calldata(9));
    elsewhere.to = Some("0x00000000000000000000000000000000000000ff".to_string());
    let mut nowhere = tx(2, 95, CALLER, poke_calldata(9));
    nowhere.to = None;

    let (summary, alerts, _) = collect(
        &document,
        &config,
        vec![elsewhere, nowhere, tx(3, 100, CALLER, poke_calldata(1))],
    );

    assert_eq!(summary.transactions_seen, 1);
    assert_eq!(summary.steps_executed, 1);
    assert!(alerts.is_empty());
}

#[test]
fn contract_address_matching_ignores_case() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    let mut checksummed = tx(1, 100, CALLER, poke_calldata(1));
    checksummed.to = Some(CONTRACT.to_uppercase().replace("0X", "0x"));
    let (summary, _, _) = collect(&document, &config, vec![checksummed]);
    assert_eq!(summary.steps_executed, 1);
}

#[test]
fn replays_are_deterministic() {
    let document = model();
    let config = mapping(serde_json::json!({ "strict_unmapped": true }));
    let txs = || {
        vec![
            tx(1, 100, CALLER, poke_calldata(1)),
            tx(2, 120, STRANGER, poke_calldata(2)),
            tx(3, 150, CALLER, hex::decode("deadbeef").unwrap()),
            tx(4, 180, CALLER, settle_calldata()),
        ]
    };

    let (summary_a, alerts_a, marking_a) = collect(&document, &config, txs());
    let (summary_b, alerts_b, marking_b) = collect(&document, &config, txs());

    assert_eq!(serde_json::to_value(&summary_a).unwrap(), serde_json::to_value(&summary_b).unwrap());
    assert_eq!(
        serde_json::to_value(&alerts_a).unwrap(),
        serde_json::to_value(&alerts_b).unwrap()
    );
    assert_eq!(marking_a, marking_b);
}

#[test]
fn empty_trace_reports_the_initial_state() {
    let document = model();
    let config = mapping(serde_json::json!({}));

    let (summary, alerts, marking) = collect(&document, &config, Vec::new());

    assert_eq!(summary.transactions_seen, 0);
    assert!(alerts.is_empty());
    assert!(summary.final_accepting);
    assert_eq!(&marking, &document.instantiate().unwrap().marking().clone());
}

#[test]
fn escrow_acceptance_toggles_across_the_happy_path() {
    let document = load_model(fixture("models/escrow.json")).expect("model loads");
    let config = load_mapping(fixture("mappings/escrow.json")).expect("mapping loads");
    let mut instance = document.instantiate().expect("instantiates");
    assert!(instance.is_accepting(), "fresh escrow owes nothing");

    let source = read_trace(fixture("traces/escrow_happy.jsonl")).expect("trace reads");
    let mut acceptance = Vec::new();
    for item in source {
        let tx = item.expect("well-formed trace");
        match translate(&tx, &config) {
            Translated::Step(step) => {
                dcrwatch::monitor::process_step(&mut instance, &step)
                    .expect("step runs")
                    .map(|alert| panic!("unexpected alert {alert:?}"));
                acceptance.push(instance.is_accepting());
            }
            other => panic!("expected a step, got {other:?}"),
        }
    }
    assert_eq!(
        acceptance,
        [false, false, false, true],
        "each approval keeps the process open until the withdrawal closes it"
    );
}

#[test]
fn run_monitor_validates_before_running() {
    let document = model();

    let bad_mapping = parse_mapping(
        &serde_json::json!({
            "contract": CONTRACT,
            "functions": [ { "signature": "poke(uint256)", "event": "missing", "bind": { "arg": 0 } } ],
            "roles": { CALLER: "caller" }
        })
        .to_string(),
    )
    .expect("shape is fine");

    let err = run_monitor(TraceSource::from_vec(Vec::new()), &bad_mapping, &document, |_| {})
        .expect_err("mapping references a ghost event");
    match err {
        dcrwatch::monitor::MonitorError::Mapping(diagnostics) => {
            assert!(
                diagnostics.iter().any(|d| d.message.contains("missing")),
                "diagnostics name the bad event: {diagnostics:?}"
            );
        }
        other => panic!("wrong error class: {other}"),
    }
}
