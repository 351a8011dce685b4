//! Time in the casino model: the timeout claim unlocks exactly one day
//! after the bet, strict advancement refuses to cross a deadline, and a
//! claimed timeout voids the pending decision instead of fulfilling it.
//!
//! Run with: cargo run --example timed_casino

use dcrwatch::model::parse_model;
use dcrwatch::{EventId, TimeMode};

const DAY: u64 = 86_400;

fn main() {
    let doc = parse_model(include_str!("../fixtures/models/casino.json")).expect("model parses");
    let mut inst = doc.instantiate().expect("model instantiates");

    let timeout = EventId::from("timeoutBet");

    inst.execute(&"createGame".into(), Some("operator"), Some("game-1".into())).unwrap();
    inst.execute(&"placeBet".into(), Some("player"), Some(500u64.into())).unwrap();
    println!("bet placed; decision pending: {:?}", inst.marking().pending.keys().collect::<Vec<_>>());

    // One second short of a day: the claim stays locked.
    inst.advance(DAY - 1, TimeMode::Permissive).unwrap();
    let verdict = inst.is_enabled(&timeout, Some("player")).unwrap();
    println!("after {} ticks, timeout enabled={}", DAY - 1, verdict.enabled);
    for blocker in &verdict.blockers {
        println!("  blocked: {blocker}");
    }

    // The final second flips it.
    inst.advance(1, TimeMode::Strict).unwrap();
    let verdict = inst.is_enabled(&timeout, Some("player")).unwrap();
    println!("after {DAY} ticks, timeout enabled={}", verdict.enabled);

    // Claiming the timeout cancels the operator's obligation to decide.
    println!("accepting before claim: {}", inst.is_accepting());
    inst.execute(&timeout, Some("player"), None).unwrap();
    println!("accepting after claim:  {}", inst.is_accepting());
    println!("pending after claim:    {:?}", inst.marking().pending.keys().collect::<Vec<_>>());

    // Strict mode demonstration on a model with a finite deadline: build a
    // tiny one inline through the document format.
    let doc = parse_model(
        r#"{
            "roles": ["clerk"],
            "events": [
                {"id": "file", "roles": ["clerk"]},
                {"id": "approve", "roles": ["clerk"]}
            ],
            "relations": [
                {"kind": "response", "source": "file", "target": "approve", "deadline": "PT1M"}
            ],
            "initial": {"included": ["file", "approve"]}
        }"#,
    )
    .expect("inline model parses");
    let mut inst = doc.instantiate().unwrap();
    inst.execute(&"file".into(), Some("clerk"), None).unwrap();

    println!("\nfiled; approval due within 60 ticks");
    match inst.advance(61, TimeMode::Strict) {
        Ok(_) => unreachable!("strict advance must refuse"),
        Err(e) => println!("strict advance of 61: {e}"),
    }
    // Exactly reaching the deadline is fine; it is crossing that trips.
    inst.advance(60, TimeMode::Strict).unwrap();
    println!("strict advance of 60: ok, approval now due immediately");
    let overdue = inst.advance(5, TimeMode::Permissive).unwrap();
    for alert in overdue {
        println!("permissive advance of 5: {} missed by {}", alert.event, alert.missed_by);
    }
}
