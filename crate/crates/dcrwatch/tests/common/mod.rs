//! Shared helpers for the integration suites: a brute-force reference
//! implementation of the engine rules, a seeded random graph generator,
//! and path plumbing for fixtures and the compiled binary.
//!
//! The reference implementation is written as plain loops over the raw
//! relation list, on purpose. It shares no traversal code with the
//! engine, so agreement between the two is evidence, not tautology. It
//! only supports what the generator produces: unguarded relations and
//! computation events whose expression is the literal `true`.

#![allow(dead_code)]

use dcrwatch::graph::{DcrGraph, Event, EventId, Relation, RelationKind};
use dcrwatch::marking::{Deadline, Marking};
use dcrwatch::{BlockReason, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::PathBuf;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_dcrwatch")
}

/// Reference enabledness: transcribes the four clauses directly.
/// Precondition: every relation guard is the literal `true`.
pub fn reference_blockers(
    graph: &DcrGraph,
    marking: &Marking,
    event: &EventId,
    role: Option<&str>,
) -> Vec<BlockReason> {
    let mut blockers = Vec::new();
    if let Some(r) = role {
        let label = &graph.events[event].label;
        if !label.roles.iter().any(|have| have == r) {
            blockers.push(BlockReason::RoleDenied { role: r.to_string() });
        }
    }
    if !marking.included.contains(event) {
        blockers.push(BlockReason::NotIncluded);
    }
    for rel in &graph.relations {
        if rel.kind == RelationKind::Condition && &rel.target == event {
            if !marking.included.contains(&rel.source) {
                continue;
            }
            let need = rel.delay.unwrap_or(0);
            let ran = marking.executed.get(&rel.source).copied();
            let met = matches!(ran, Some(age) if age >= need);
            if !met {
                blockers.push(BlockReason::ConditionUnmet {
                    source: rel.source.clone(),
                    required_delay: need,
                    elapsed: ran,
                });
            }
        }
    }
    for rel in &graph.relations {
        if rel.kind == RelationKind::Milestone && &rel.target == event {
            if !marking.included.contains(&rel.source) {
                continue;
            }
            if marking.pending.contains_key(&rel.source) {
                blockers.push(BlockReason::MilestoneBlocked {
                    source: rel.source.clone(),
                });
            }
        }
    }
    blockers
}

/// Reference execution effects, all read from the pre-execution marking.
/// Precondition: unguarded relations, computation events with expression
/// `true` (so the computed value is known without an evaluator).
pub fn reference_execute(
    graph: &DcrGraph,
    marking: &Marking,
    event: &EventId,
    input: Option<Value>,
) -> Marking {
    let mut next = marking.clone();

    next.values
        .insert(event.clone(), input.unwrap_or(Value::Bool(true)));
    next.executed.insert(event.clone(), 0);
    next.pending.remove(event);

    for rel in &graph.relations {
        if rel.kind == RelationKind::Response && &rel.source == event {
            let offered = rel.deadline.unwrap_or(Deadline::Infinite);
            let merged = match next.pending.get(&rel.target) {
                Some(existing) if *existing < offered => *existing,
                _ => offered,
            };
            next.pending.insert(rel.target.clone(), merged);
        }
    }
    for rel in &graph.relations {
        if rel.kind == RelationKind::Cancel && &rel.source == event {
            next.pending.remove(&rel.target);
        }
    }

    let mut included = next.included.clone();
    for rel in &graph.relations {
        if rel.kind == RelationKind::Exclude && &rel.source == event {
            included.remove(&rel.target);
        }
    }
    for rel in &graph.relations {
        if rel.kind == RelationKind::Include && &rel.source == event {
            included.insert(rel.target.clone());
        }
    }
    next.included = included;

    next
}

pub fn reference_accepting(marking: &Marking) -> bool {
    marking
        .pending
        .keys()
        .all(|event| !marking.included.contains(event))
}

const ROLES: [&str; 3] = ["alice", "bob", "carol"];

const KINDS: [RelationKind; 6] = [
    RelationKind::Condition,
    RelationKind::Response,
    RelationKind::Include,
    RelationKind::Exclude,
    RelationKind::Milestone,
    RelationKind::Cancel,
];

/// A small random graph: up to 5 events, up to 8 unguarded untimed
/// relations, each event labelled with a random subset of three roles.
/// Deterministic in the seed.
pub fn random_graph(seed: u64) -> DcrGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = DcrGraph::default();
    for role in ROLES {
        graph.roles.insert(role.to_string());
    }

    let n_events = rng.random_range(1..=5);
    let ids: Vec<EventId> = (0..n_events)
        .map(|i| EventId::new(format!("e{i}")))
        .collect();
    for id in &ids {
        let mut roles: Vec<&str> = Vec::new();
        for role in ROLES {
            if rng.random_bool(0.5) {
                roles.push(role);
            }
        }
        graph
            .events
            .insert(id.clone(), Event::simple(id.as_str(), &roles));
    }

    let n_relations = rng.random_range(0..=8);
    for _ in 0..n_relations {
        let kind = KINDS[rng.random_range(0..KINDS.len())];
        let source = ids[rng.random_range(0..ids.len())].clone();
        let target = ids[rng.random_range(0..ids.len())].clone();
        graph.relations.push(Relation::new(kind, source, target));
    }

    graph
}

/// A random marking over the graph's events: each event independently
/// included, executed at a small age, pending with a small or infinite
/// deadline.
pub fn random_marking(graph: &DcrGraph, seed: u64) -> Marking {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut marking = Marking::default();
    for id in graph.events.keys() {
        if rng.random_bool(0.7) {
            marking.included.insert(id.clone());
        }
        if rng.random_bool(0.5) {
            marking.executed.insert(id.clone(), rng.random_range(0..4));
        }
        if rng.random_bool(0.4) {
            let deadline = if rng.random_bool(0.3) {
                Deadline::Infinite
            } else {
                Deadline::Finite(rng.random_range(0..5))
            };
            marking.pending.insert(id.clone(), deadline);
        }
    }
    marking
}

/// All role choices worth probing: no role plus every declared role.
pub fn role_choices(graph: &DcrGraph) -> Vec<Option<String>> {
    let mut out = vec![None];
    out.extend(graph.roles.iter().cloned().map(Some));
    out
}

/// Event ids of a graph as a sorted set, for quick membership asserts.
pub fn event_ids(graph: &DcrGraph) -> BTreeSet<EventId> {
    graph.events.keys().cloned().collect()
}
