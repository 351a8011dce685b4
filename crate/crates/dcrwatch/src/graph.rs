//! Static structure of a DCR graph: events, labels, relations, groups.

use crate::expr::Expr;
use crate::marking::Deadline;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Identifier of an event (or, before flattening, of a group used as a
/// relation endpoint). Groups share the identifier namespace with events and
/// validation keeps the two disjoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(String);

impl EventId {
    pub fn new(name: impl Into<String>) -> EventId {
        EventId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> EventId {
        EventId::new(s)
    }
}

impl From<String> for EventId {
    fn from(s: String) -> EventId {
        EventId(s)
    }
}

/// What an event presents to the outside: who may run it and under which
/// activity name. An empty role set means no named role may run it (only
/// the role-bypassing simulation mode can).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub roles: BTreeSet<String>,
    pub action: String,
}

/// Whether executing the event computes its value from an expression or
/// consumes a caller-supplied input value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Computation(Expr),
    Input,
}

/// One declared event: label plus kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub label: Label,
    pub kind: EventKind,
}

impl Event {
    /// A computation event whose expression is the literal `true`.
    pub fn simple(action: impl Into<String>, roles: &[&str]) -> Event {
        Event {
            label: Label {
                roles: roles.iter().map(|r| r.to_string()).collect(),
                action: action.into(),
            },
            kind: EventKind::Computation(Expr::truth()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Condition,
    Response,
    Cancel,
    Milestone,
    Include,
    Exclude,
}

impl RelationKind {
    pub const ALL: [RelationKind; 6] = [
        RelationKind::Condition,
        RelationKind::Response,
        RelationKind::Cancel,
        RelationKind::Milestone,
        RelationKind::Include,
        RelationKind::Exclude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::Condition => "condition",
            RelationKind::Response => "response",
            RelationKind::Cancel => "cancel",
            RelationKind::Milestone => "milestone",
            RelationKind::Include => "include",
            RelationKind::Exclude => "exclude",
        }
    }
}

/// One relation edge. `delay` belongs to conditions (target needs the source
/// executed at least that long ago) and `deadline` to responses (the created
/// obligation's time budget); both stay `None` elsewhere, which validation
/// enforces. The engine reads a missing delay as 0 and a missing deadline as
/// no deadline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub kind: RelationKind,
    pub source: EventId,
    pub target: EventId,
    pub guard: Expr,
    pub delay: Option<u64>,
    pub deadline: Option<Deadline>,
}

impl Relation {
    pub fn new(kind: RelationKind, source: impl Into<EventId>, target: impl Into<EventId>) -> Relation {
        Relation {
            kind,
            source: source.into(),
            target: target.into(),
            guard: Expr::truth(),
            delay: None,
            deadline: None,
        }
    }

    pub fn with_guard(mut self, guard: Expr) -> Relation {
        self.guard = guard;
        self
    }

    pub fn with_delay(mut self, ticks: u64) -> Relation {
        self.delay = Some(ticks);
        self
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Relation {
        self.deadline = Some(deadline);
        self
    }

    /// Condition delay; absent means immediately after execution.
    pub fn effective_delay(&self) -> u64 {
        self.delay.unwrap_or(0)
    }

    /// Response deadline; absent means the obligation never expires.
    pub fn effective_deadline(&self) -> Deadline {
        self.deadline.unwrap_or(Deadline::Infinite)
    }
}

/// A DCR graph: declared events, relation edges, nesting groups, and the
/// declared role vocabulary. Semantics (enabledness, execution, time,
/// flattening) live in [`crate::engine`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DcrGraph {
    pub events: BTreeMap<EventId, Event>,
    pub relations: Vec<Relation>,
    /// Group name to members; members may be events or other groups.
    pub groups: BTreeMap<EventId, BTreeSet<EventId>>,
    pub roles: BTreeSet<String>,
}

impl DcrGraph {
    pub fn has_event(&self, id: &EventId) -> bool {
        self.events.contains_key(id)
    }

    pub fn has_group(&self, id: &EventId) -> bool {
        self.groups.contains_key(id)
    }

    /// Relations of one kind pointing at `target`. Meaningful on a
    /// flattened graph, where every endpoint is an event.
    pub fn relations_into<'a>(
        &'a self,
        kind: RelationKind,
        target: &'a EventId,
    ) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations
            .iter()
            .filter(move |r| r.kind == kind && &r.target == target)
    }

    /// Relations of one kind leaving `source`.
    pub fn relations_from<'a>(
        &'a self,
        kind: RelationKind,
        source: &'a EventId,
    ) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations
            .iter()
            .filter(move |r| r.kind == kind && &r.source == source)
    }
}
