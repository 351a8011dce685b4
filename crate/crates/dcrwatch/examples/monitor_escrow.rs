//! The full conformance pipeline: replay a clean trace and a faulty one
//! against the escrow model. The faulty contract released funds after only
//! one approval; the monitor pinpoints the offending transaction.
//!
//! Run with: cargo run --example monitor_escrow

use dcrwatch::model::load_model;
use dcrwatch::monitor::{load_mapping, run_monitor};
use dcrwatch::trace::read_trace;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let document = load_model(dir.join("models/escrow.json")).expect("model loads");
    let config = load_mapping(dir.join("mappings/escrow.json")).expect("mapping loads");

    for trace_name in ["escrow_happy.jsonl", "escrow_faulty.jsonl"] {
        println!("== {trace_name} ==");
        let source = read_trace(dir.join("traces").join(trace_name)).expect("trace opens");
        let summary = run_monitor(source, &config, &document, |alert| {
            println!(
                "  ALERT [{}] at block {} tx {}: {}",
                alert.kind.name(),
                alert.provenance.block_number,
                alert.provenance.tx_index,
                alert.message
            );
        })
        .expect("replay runs");
        println!(
            "  {} tx seen, {} steps executed, {} alert(s), accepting at end: {}",
            summary.transactions_seen,
            summary.steps_executed,
            summary.alerts.total(),
            summary.final_accepting
        );
        match &summary.diverged_at {
            Some(p) => println!("  diverged at block {} tx {} ({})", p.block_number, p.tx_index, p.hash),
            None => println!("  trace conforms to the model"),
        }
        println!();
    }
}
