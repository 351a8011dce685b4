//! Execution engine for timed DCR (Dynamic Condition Response) graphs with
//! data and roles, plus an off-chain conformance monitor that replays
//! Ethereum-style transaction traces against a DCR model and reports every
//! point where the chain diverged from the modelled process.
//!
//! A DCR graph describes a process declaratively: events carry roles and an
//! optional computation, and six relation families (condition, response,
//! cancel, milestone, include, exclude) constrain when events may run and
//! what obligations a run creates. The runtime state is a [`Marking`]:
//! which events are included, which are pending with what deadline, when
//! each last ran, and what value it produced.
//!
//! The monitor side decodes transaction calldata (in-repo Keccak-256 and a
//! static-type ABI subset), maps function calls to model events through a
//! mapping config, and drives the engine step by step, emitting an alert for
//! every transaction the model would have refused.
//!
//! # Examples
//!
//! Each major capability has a runnable example (`cargo run --example <name>`):
//!
//! | example | shows |
//! |---------|-------|
//! | `escrow_walkthrough` | loading a model and executing a happy path by hand |
//! | `timed_casino` | delayed conditions, deadline bisection, timeout flows |
//! | `guard_expressions` | expression parsing, evaluation, guarded relations |
//! | `decode_calldata` | selectors, calldata encode/decode, malformed inputs |
//! | `replay_trace` | reading a JSONL trace and translating transactions |
//! | `monitor_escrow` | end-to-end conformance check that catches a bad contract |
//! | `engine_server` | the HTTP facade driven by a real client |
//! | `pattern_scenarios` | the scripted fixture corpus (commit-reveal, circuit breaker, ...) |
//!
//! # Quick start
//!
//! ```
//! use dcrwatch::model::parse_model;
//!
//! let doc = parse_model(include_str!("../fixtures/models/escrow.json")).unwrap();
//! let mut inst = doc.instantiate().unwrap();
//! assert!(inst.is_accepting());
//! inst.execute(&"placeInEscrow".into(), Some("sender"), Some(1_000_000u64.into())).unwrap();
//! assert!(!inst.is_accepting()); // releases and withdraw are now pending
//! ```

pub mod abi;
pub mod cli;
pub mod engine;
pub mod expr;
pub mod graph;
pub mod marking;
pub mod model;
pub mod monitor;
pub mod repl;
pub mod scenario;
pub mod service;
pub mod trace;

pub use engine::{BlockReason, EnabledVerdict, EngineError, Instance, OverdueAlert, TimeMode};
pub use expr::{Expr, Value};
pub use graph::{DcrGraph, Event, EventId, EventKind, Label, Relation, RelationKind};
pub use marking::{Deadline, Marking};
pub use model::ModelDocument;
