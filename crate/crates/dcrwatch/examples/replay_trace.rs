//! Reads a JSONL transaction trace and shows the translation layer on its
//! own: which transactions become model steps, which are skipped, and what
//! each step carries (event, role, bound input).
//!
//! Run with: cargo run --example replay_trace

use dcrwatch::monitor::{parse_mapping, translate, Translated};
use dcrwatch::trace::read_trace;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let config =
        parse_mapping(include_str!("../fixtures/mappings/escrow.json")).expect("mapping parses");

    let source = read_trace(dir.join("traces/escrow_happy.jsonl")).expect("trace opens");
    for item in source.filter_to_contract(&config.contract) {
        let tx = item.expect("trace is well formed");
        print!(
            "block {:>2} 0x{} from {}..{} ",
            tx.block_number,
            hex::encode(&tx.input[..4.min(tx.input.len())]),
            &tx.from[..6],
            &tx.from[tx.from.len() - 4..]
        );
        match translate(&tx, &config) {
            Translated::Step(step) => println!(
                "=> step {} as {} input {}",
                step.event,
                step.role.as_deref().unwrap_or("(any)"),
                step.input.map(|v| v.to_string()).unwrap_or_else(|| "(none)".into()),
            ),
            Translated::Skip(reason) => println!("=> skipped ({reason:?})"),
            Translated::Alert(alert) => println!("=> alert: {}", alert.message),
        }
    }
}
