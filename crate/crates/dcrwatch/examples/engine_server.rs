//! The HTTP facade, driven end to end by a real client: create a graph
//! instance from a model document, inspect enabledness, execute steps,
//! advance time, and hit the error paths (refusal with blockers, strict
//! deadline violation).
//!
//! Run with: cargo run --example engine_server

use dcrwatch::service::spawn_background;
use serde_json::{json, Value};

fn main() {
    let addr = spawn_background("127.0.0.1:0").expect("server starts");
    let base = format!("http://{addr}");
    let http = reqwest::blocking::Client::new();
    println!("server on {base}");

    // Create an instance from a model document.
    let model = include_str!("../fixtures/models/escrow.json");
    let created: Value = http
        .post(format!("{base}/graphs"))
        .body(model)
        .send()
        .expect("request")
        .json()
        .expect("json");
    let id = created["id"].as_str().expect("id").to_string();
    println!("created graph {id}");

    // Who can do what before any step?
    let enabled: Value = http
        .get(format!("{base}/graphs/{id}/enabled?role=receiver&verbose=1"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("receiver sees enabled={} blocked={}", enabled["enabled"], enabled["blocked"]);

    // A refused step comes back as 409 with the blockers spelled out.
    let refusal = http
        .post(format!("{base}/graphs/{id}/execute"))
        .json(&json!({ "event": "withdrawFromEscrow", "role": "receiver" }))
        .send()
        .unwrap();
    println!("early withdraw: HTTP {} {}", refusal.status(), refusal.json::<Value>().unwrap());

    // The happy path over the wire.
    for (event, role, value) in [
        ("placeInEscrow", "sender", Some(1_000_000u64)),
        ("releaseBySender", "sender", None),
        ("releaseByReceiver", "receiver", None),
        ("withdrawFromEscrow", "receiver", None),
    ] {
        let mut body = json!({ "event": event, "role": role });
        if let Some(v) = value {
            body["value"] = json!(v);
        }
        let reply: Value = http
            .post(format!("{base}/graphs/{id}/execute"))
            .json(&body)
            .send()
            .unwrap()
            .json()
            .unwrap();
        println!("executed {event}: accepting={}", reply["accepting"]);
    }

    // Time over the wire: durations are accepted as strings.
    let advanced: Value = http
        .post(format!("{base}/graphs/{id}/advance"))
        .json(&json!({ "ticks": "PT1H", "mode": "permissive" }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("advanced an hour: overdue={}", advanced["overdue"]);

    let gone = http.delete(format!("{base}/graphs/{id}")).send().unwrap();
    println!("deleted: HTTP {}", gone.status());
    let missing = http.get(format!("{base}/graphs/{id}/marking")).send().unwrap();
    println!("marking after delete: HTTP {}", missing.status());
}
