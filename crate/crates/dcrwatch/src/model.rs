//! Model documents: the JSON file format for a DCR graph plus its initial
//! marking, with parsing, validation, and serialization.
//!
//! The format (see `fixtures/models/escrow.json` for a worked file):
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "name": "escrow",
//!   "description": "...",
//!   "tick_unit": "seconds",
//!   "roles": ["sender", "receiver"],
//!   "events": [
//!     {"id": "placeInEscrow", "action": "place funds", "roles": ["sender"], "kind": "input"},
//!     {"id": "audit", "kind": "computation", "expression": "@placeInEscrow > 0"}
//!   ],
//!   "relations": [
//!     {"kind": "condition", "source": "a", "target": "b", "delay": "P1D", "guard": "@a > 0"},
//!     {"kind": "response", "source": "a", "target": "b", "deadline": "PT1H"}
//!   ],
//!   "groups": {"breaker": ["contingency", "revive"]},
//!   "initial": {
//!     "included": ["placeInEscrow"],
//!     "pending": {"b": "infinite"},
//!     "executed": {"a": 0},
//!     "values": {"a": 7}
//!   }
//! }
//! ```
//!
//! `kind` defaults to `"computation"` and a computation without an
//! `expression` computes the literal `true`. `action` defaults to the
//! event id. Delays and deadlines are duration strings (`"P1D"`, `"3600"`);
//! a response deadline may also be `"infinite"`, which is the default.

use crate::engine::{EngineError, Instance};
use crate::expr::{parse_duration, parse_expr, Expr};
use crate::graph::{DcrGraph, Event, EventId, EventKind, Label, Relation, RelationKind};
use crate::marking::{Deadline, Marking};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelMetadata {
    pub format_version: u32,
    pub name: Option<String>,
    pub description: Option<String>,
    /// Label for what one tick means; informational only.
    pub tick_unit: Option<String>,
}

/// A parsed model: graph, initial marking, metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub graph: DcrGraph,
    pub initial: Marking,
    pub metadata: ModelMetadata,
}

impl ModelDocument {
    /// Flattens the graph and pairs it with the initial marking.
    pub fn instantiate(&self) -> Result<Instance, EngineError> {
        Instance::new(self.graph.clone(), self.initial.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("model is not valid JSON: {0}")]
    Syntax(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn schema_err(path: impl Into<String>, message: impl fmt::Display) -> ModelError {
    ModelError::Schema { path: path.into(), message: message.to_string() }
}

/// One validation finding; an empty finding list means the document upholds
/// every graph invariant and can be instantiated without `Unknown*` errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

// ---- file-shape structs (serde) ----

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    format_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tick_unit: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    roles: Vec<String>,
    #[serde(default)]
    events: Vec<EventFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    relations: Vec<RelationFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    groups: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "InitialFile::is_empty")]
    initial: InitialFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    roles: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expression: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    kind: String,
    source: String,
    target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delay: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deadline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    included: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pending: BTreeMap<String, Deadline>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    executed: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    values: BTreeMap<String, crate::expr::Value>,
}

impl InitialFile {
    fn is_empty(&self) -> bool {
        self.included.is_empty()
            && self.pending.is_empty()
            && self.executed.is_empty()
            && self.values.is_empty()
    }
}

// ---- parse ----

/// Parses model JSON. Syntax covers JSON shape plus embedded expression and
/// duration strings; cross-reference problems (undeclared events, misplaced
/// delays) are left to [`validate_model`] so one pass can report them all.
pub fn parse_model(text: &str) -> Result<ModelDocument, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Data {
            schema_err("<document>", e)
        } else {
            ModelError::Syntax(e.to_string())
        }
    })?;

    let mut graph = DcrGraph::default();
    graph.roles = file.roles.into_iter().collect();

    for (i, ev) in file.events.into_iter().enumerate() {
        let path = format!("events[{i}]");
        let kind = match ev.kind.as_deref().unwrap_or("computation") {
            "computation" => {
                let expr = match &ev.expression {
                    Some(src) => parse_expr(src)
                        .map_err(|e| schema_err(format!("{path}.expression"), e))?,
                    None => Expr::truth(),
                };
                EventKind::Computation(expr)
            }
            "input" => {
                if ev.expression.is_some() {
                    return Err(schema_err(
                        format!("{path}.expression"),
                        "input events have no expression; their value arrives at execution",
                    ));
                }
                EventKind::Input
            }
            other => {
                return Err(schema_err(
                    format!("{path}.kind"),
                    format!("unknown kind {other:?}, expected \"computation\" or \"input\""),
                ))
            }
        };
        let id = EventId::new(ev.id.clone());
        if graph.events.contains_key(&id) {
            return Err(schema_err(format!("{path}.id"), format!("duplicate event id {:?}", ev.id)));
        }
        graph.events.insert(
            id,
            Event {
                label: Label {
                    roles: ev.roles.into_iter().collect(),
                    action: ev.action.unwrap_or(ev.id),
                },
                kind,
            },
        );
    }

    for (i, rel) in file.relations.into_iter().enumerate() {
        let path = format!("relations[{i}]");
        let kind = RelationKind::ALL
            .into_iter()
            .find(|k| k.name() == rel.kind)
            .ok_or_else(|| {
                schema_err(
                    format!("{path}.kind"),
                    format!("unknown relation kind {:?}", rel.kind),
                )
            })?;
        let guard = match &rel.guard {
            Some(src) => parse_expr(src).map_err(|e| schema_err(format!("{path}.guard"), e))?,
            None => Expr::truth(),
        };
        let delay = match &rel.delay {
            Some(src) => Some(
                parse_duration(src).map_err(|e| schema_err(format!("{path}.delay"), e))?,
            ),
            None => None,
        };
        let deadline = match rel.deadline.as_deref() {
            Some("infinite") => Some(Deadline::Infinite),
            Some(src) => Some(Deadline::Finite(
                parse_duration(src).map_err(|e| schema_err(format!("{path}.deadline"), e))?,
            )),
            None => None,
        };
        graph.relations.push(Relation {
            kind,
            source: EventId::new(rel.source),
            target: EventId::new(rel.target),
            guard,
            delay,
            deadline,
        });
    }

    for (name, members) in file.groups {
        graph
            .groups
            .insert(EventId::new(name), members.into_iter().map(EventId::new).collect());
    }

    let initial = Marking {
        included: file.initial.included.into_iter().map(EventId::new).collect(),
        pending: file
            .initial
            .pending
            .into_iter()
            .map(|(k, v)| (EventId::new(k), v))
            .collect(),
        executed: file
            .initial
            .executed
            .into_iter()
            .map(|(k, v)| (EventId::new(k), v))
            .collect(),
        values: file
            .initial
            .values
            .into_iter()
            .map(|(k, v)| (EventId::new(k), v))
            .collect(),
    };

    Ok(ModelDocument {
        graph,
        initial,
        metadata: ModelMetadata {
            format_version: file.format_version.unwrap_or(FORMAT_VERSION),
            name: file.name,
            description: file.description,
            tick_unit: file.tick_unit,
        },
    })
}

/// Reads and parses a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelDocument, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&text)
}

// ---- validate ----

/// Checks every cross-reference and placement invariant. Returns all
/// findings; an empty list means the document is clean.
pub fn validate_model(doc: &ModelDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let g = &doc.graph;
    fn push(out: &mut Vec<Diagnostic>, path: String, message: String) {
        out.push(Diagnostic { path, message });
    }

    for (id, event) in &g.events {
        let path = format!("events[{id}]");
        if id.as_str().is_empty() {
            push(&mut out, path.clone(), "event id must be non-empty".into());
        }
        if event.label.action.is_empty() {
            push(&mut out, format!("{path}.action"), "action must be non-empty".into());
        }
        for role in &event.label.roles {
            if !g.roles.contains(role) {
                push(&mut out, format!("{path}.roles"), format!("role {role:?} is not declared"));
            }
        }
        if let EventKind::Computation(expr) = &event.kind {
            for referenced in expr.referenced_events() {
                if !g.has_event(referenced) {
                    push(&mut out, 
                        format!("{path}.expression"),
                        format!("references undeclared event {referenced}"),
                    );
                }
            }
        }
        if g.has_group(id) {
            push(&mut out, path, format!("{id} is declared both as an event and as a group"));
        }
    }

    for (name, members) in &g.groups {
        let path = format!("groups[{name}]");
        for member in members {
            if !g.has_event(member) && !g.has_group(member) {
                push(&mut out, path.clone(), format!("member {member} is neither an event nor a group"));
            }
        }
    }
    out.extend(group_shape_diagnostics(g));

    for (i, rel) in g.relations.iter().enumerate() {
        let path = format!("relations[{i}]");
        for (field, endpoint) in [("source", &rel.source), ("target", &rel.target)] {
            if !g.has_event(endpoint) && !g.has_group(endpoint) {
                push(&mut out, 
                    format!("{path}.{field}"),
                    format!("{endpoint} is neither a declared event nor a group"),
                );
            }
        }
        if rel.delay.is_some() && rel.kind != RelationKind::Condition {
            push(&mut out, 
                format!("{path}.delay"),
                format!("delay is only meaningful on conditions, not {}", rel.kind.name()),
            );
        }
        if rel.deadline.is_some() && rel.kind != RelationKind::Response {
            push(&mut out, 
                format!("{path}.deadline"),
                format!("deadline is only meaningful on responses, not {}", rel.kind.name()),
            );
        }
        for referenced in rel.guard.referenced_events() {
            if !g.has_event(referenced) {
                push(&mut out, format!("{path}.guard"), format!("references undeclared event {referenced}"));
            }
        }
    }

    let initial_domains: [(&str, Box<dyn Iterator<Item = &EventId> + '_>); 4] = [
        ("initial.included", Box::new(doc.initial.included.iter())),
        ("initial.pending", Box::new(doc.initial.pending.keys())),
        ("initial.executed", Box::new(doc.initial.executed.keys())),
        ("initial.values", Box::new(doc.initial.values.keys())),
    ];
    for (path, ids) in initial_domains {
        for id in ids {
            if !g.has_event(id) {
                push(&mut out, path.to_string(), format!("{id} is not a declared event"));
            }
        }
    }

    out
}

/// Groups must nest as a forest: acyclic, and two groups may share events
/// only when one (transitively) contains the other.
fn group_shape_diagnostics(g: &DcrGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut resolved: BTreeMap<&EventId, BTreeSet<&EventId>> = BTreeMap::new();

    fn resolve<'a>(
        g: &'a DcrGraph,
        name: &'a EventId,
        stack: &mut Vec<&'a EventId>,
        resolved: &mut BTreeMap<&'a EventId, BTreeSet<&'a EventId>>,
        out: &mut Vec<Diagnostic>,
    ) -> BTreeSet<&'a EventId> {
        if let Some(done) = resolved.get(name) {
            return done.clone();
        }
        if stack.contains(&name) {
            out.push(Diagnostic {
                path: format!("groups[{name}]"),
                message: "cyclic group nesting".into(),
            });
            return BTreeSet::new();
        }
        stack.push(name);
        let mut events = BTreeSet::new();
        if let Some(members) = g.groups.get(name) {
            for member in members {
                if g.has_event(member) {
                    events.insert(member);
                } else if g.has_group(member) {
                    events.extend(resolve(g, member, stack, resolved, out));
                }
            }
        }
        stack.pop();
        resolved.insert(name, events.clone());
        events
    }

    let names: Vec<&EventId> = g.groups.keys().collect();
    for name in &names {
        let mut stack = Vec::new();
        resolve(g, name, &mut stack, &mut resolved, &mut out);
    }
    for (i, a) in names.iter().enumerate() {
        for b in names.iter().skip(i + 1) {
            let (ea, eb) = (&resolved[*a], &resolved[*b]);
            let overlap = ea.intersection(eb).next().is_some();
            if overlap && !ea.is_subset(eb) && !eb.is_subset(ea) {
                out.push(Diagnostic {
                    path: format!("groups[{a}]"),
                    message: format!("overlaps group {b} without nesting inside it"),
                });
            }
        }
    }
    out
}

// ---- serialize ----

/// Renders the document back to format JSON. `parse_model` of the output
/// yields a structurally equal document.
pub fn serialize_model(doc: &ModelDocument) -> String {
    let file = ModelFile {
        format_version: Some(doc.metadata.format_version),
        name: doc.metadata.name.clone(),
        description: doc.metadata.description.clone(),
        tick_unit: doc.metadata.tick_unit.clone(),
        roles: doc.graph.roles.iter().cloned().collect(),
        events: doc
            .graph
            .events
            .iter()
            .map(|(id, event)| EventFile {
                id: id.to_string(),
                action: Some(event.label.action.clone()),
                roles: event.label.roles.iter().cloned().collect(),
                kind: Some(
                    match event.kind {
                        EventKind::Computation(_) => "computation",
                        EventKind::Input => "input",
                    }
                    .to_string(),
                ),
                expression: match &event.kind {
                    EventKind::Computation(expr) if !expr.is_truth() => Some(expr.to_string()),
                    _ => None,
                },
                description: None,
            })
            .collect(),
        relations: doc
            .graph
            .relations
            .iter()
            .map(|rel| RelationFile {
                kind: rel.kind.name().to_string(),
                source: rel.source.to_string(),
                target: rel.target.to_string(),
                guard: if rel.guard.is_truth() { None } else { Some(rel.guard.to_string()) },
                delay: rel.delay.map(|d| d.to_string()),
                deadline: rel.deadline.map(|d| d.to_string()),
                description: None,
            })
            .collect(),
        groups: doc
            .graph
            .groups
            .iter()
            .map(|(name, members)| {
                (name.to_string(), members.iter().map(|m| m.to_string()).collect())
            })
            .collect(),
        initial: InitialFile {
            included: doc.initial.included.iter().map(|id| id.to_string()).collect(),
            pending: doc
                .initial
                .pending
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            executed: doc
                .initial
                .executed
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            values: doc
                .initial
                .values
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model file shape serializes");
    text.push('\n');
    text
}
