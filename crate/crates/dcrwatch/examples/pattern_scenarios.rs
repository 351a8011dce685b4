//! Runs the whole scripted scenario corpus under `fixtures/scenarios/`:
//! each file loads a pattern model and walks it through refusals, timing
//! windows, and (for the escrow) full trace replays.
//!
//! Run with: cargo run --example pattern_scenarios

use dcrwatch::scenario::run_scenario;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenarios");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .expect("scenario dir exists")
        .map(|entry| entry.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();

    let mut failures = 0usize;
    for path in &paths {
        match run_scenario(path) {
            Ok(outcome) => {
                println!("ok   {:45} {} step(s)", outcome.name, outcome.steps_run);
            }
            Err(e) => {
                failures += 1;
                println!("FAIL {}: {e}", path.display());
            }
        }
    }
    println!("\n{} scenario(s), {} failure(s)", paths.len(), failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
