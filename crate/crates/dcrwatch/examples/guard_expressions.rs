//! The expression language on its own: parsing, precedence, evaluation
//! against event values, guard semantics around undefined references, and
//! a guarded relation changing a graph's shape.
//!
//! Run with: cargo run --example guard_expressions

use dcrwatch::expr::{eval_expr, eval_guard, parse_expr};
use dcrwatch::model::parse_model;
use dcrwatch::{EventId, Marking, Value};

fn main() {
    // Precedence: comparison binds looser than arithmetic, and the printer
    // only parenthesizes where structure demands it.
    for text in [
        "1 + 2 * 3",
        "(1 + 2) * 3",
        "@bid >= @ask and not @halted",
        "-7 / 2",
    ] {
        let expr = parse_expr(text).expect("parses");
        println!("{text:30} parses as {expr}");
    }

    // Evaluation against a marking's stored values.
    let mut marking = Marking::default();
    marking.values.insert(EventId::from("bid"), Value::from(120i64));
    marking.values.insert(EventId::from("ask"), Value::from(100i64));
    marking.values.insert(EventId::from("halted"), Value::from(false));

    let expr = parse_expr("@bid >= @ask and not @halted").unwrap();
    println!("\nwith bid=120 ask=100 halted=false: {}", eval_expr(&expr, &marking).unwrap());

    // Division truncates toward zero, like the underlying integers.
    let expr = parse_expr("-7 / 2").unwrap();
    println!("-7 / 2 = {}", eval_expr(&expr, &marking).unwrap());

    // A guard over a value no event has produced yet does not error: it
    // fails closed and records which reference was undefined.
    let guard = parse_expr("@volume > 1000").unwrap();
    let outcome = eval_guard(&guard, &marking).unwrap();
    println!(
        "\nguard {guard}: holds={} (undefined reference: {:?})",
        outcome.holds,
        outcome.undefined.as_ref().map(|id| id.to_string())
    );

    // Short-circuiting means the undefined branch may never be looked at.
    let guard = parse_expr("@halted or @volume > 1000").unwrap();
    let outcome = eval_guard(&guard, &marking).unwrap();
    println!("guard {guard}: holds={} (or-branch skipped: {})", outcome.holds, outcome.undefined.is_none());

    // The same machinery drives guarded relations. The exclusion below
    // reads the clock value stored before the triggering execution.
    let doc = parse_model(include_str!("../fixtures/models/auto_deprecation.json")).unwrap();
    let mut inst = doc.instantiate().unwrap();
    let legacy = EventId::from("legacyCall");

    println!("\nclock postings: 500, 2000, 0");
    for reading in [500u64, 2000, 0] {
        inst.execute(&"setClock".into(), Some("keeper"), Some(reading.into())).unwrap();
        let alive = inst.is_enabled(&legacy, Some("user")).unwrap().enabled;
        println!("  posted {reading:4}; legacyCall still available: {alive}");
    }
}
