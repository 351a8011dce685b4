//! Loads the escrow model and walks the happy path by hand, showing how
//! enabledness, blockers, and acceptance move with each step.
//!
//! Run with: cargo run --example escrow_walkthrough

use dcrwatch::model::parse_model;
use dcrwatch::EventId;

fn main() {
    let doc = parse_model(include_str!("../fixtures/models/escrow.json")).expect("model parses");
    let mut inst = doc.instantiate().expect("model instantiates");

    let place = EventId::from("placeInEscrow");
    let release_sender = EventId::from("releaseBySender");
    let release_receiver = EventId::from("releaseByReceiver");
    let withdraw = EventId::from("withdrawFromEscrow");

    println!("== initial state ==");
    report(&inst);

    // The receiver cannot jump straight to the money.
    let verdict = inst.is_enabled(&withdraw, Some("receiver")).unwrap();
    println!("\nwithdraw before deposit? enabled={}", verdict.enabled);
    for blocker in &verdict.blockers {
        println!("  blocked: {blocker}");
    }

    println!("\n== sender deposits 1_000_000 ==");
    inst.execute(&place, Some("sender"), Some(1_000_000u64.into())).unwrap();
    report(&inst);

    // Withdrawal is included now but gated on both approvals.
    let verdict = inst.is_enabled(&withdraw, Some("receiver")).unwrap();
    println!("\nwithdraw after deposit? enabled={}", verdict.enabled);
    for blocker in &verdict.blockers {
        println!("  blocked: {blocker}");
    }

    println!("\n== both parties approve ==");
    inst.execute(&release_sender, Some("sender"), None).unwrap();
    inst.execute(&release_receiver, Some("receiver"), None).unwrap();
    report(&inst);

    println!("\n== receiver withdraws ==");
    inst.execute(&withdraw, Some("receiver"), None).unwrap();
    report(&inst);

    // The cycle is closed: a new deposit is possible again.
    let verdict = inst.is_enabled(&place, Some("sender")).unwrap();
    println!("\ndeposit again? enabled={}", verdict.enabled);
}

fn report(inst: &dcrwatch::Instance) {
    let sender: Vec<String> = inst
        .enabled_events(Some("sender"))
        .unwrap()
        .iter()
        .map(|id| id.to_string())
        .collect();
    let receiver: Vec<String> = inst
        .enabled_events(Some("receiver"))
        .unwrap()
        .iter()
        .map(|id| id.to_string())
        .collect();
    println!("  sender may run:   {}", if sender.is_empty() { "(nothing)".into() } else { sender.join(", ") });
    println!("  receiver may run: {}", if receiver.is_empty() { "(nothing)".into() } else { receiver.join(", ") });
    println!("  accepting: {}", inst.is_accepting());
}
