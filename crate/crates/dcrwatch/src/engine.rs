//! DCR semantics: enabledness, execution effects, time advancement,
//! acceptance, and group flattening.
//!
//! All operations are pure with respect to the marking: they take a marking
//! and return a new one. [`Instance`] bundles a flattened graph with a
//! current marking for callers that want mutating convenience.

use crate::expr::{eval_expr, eval_guard, ExprError, Value};
use crate::graph::{DcrGraph, EventId, EventKind, Relation, RelationKind};
use crate::marking::{Deadline, Marking};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// How time advancement treats an included event whose finite deadline
/// would be crossed: `Strict` refuses to advance, `Permissive` advances and
/// reports the lapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    Strict,
    Permissive,
}

/// One reason an event cannot run right now. An enabledness check reports
/// every failed clause, in clause order: role, inclusion, conditions (in
/// relation order), milestones (in relation order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum BlockReason {
    RoleDenied { role: String },
    NotIncluded,
    ConditionUnmet {
        source: EventId,
        required_delay: u64,
        /// Ticks since the source last ran; `None` if it never ran.
        elapsed: Option<u64>,
    },
    MilestoneBlocked { source: EventId },
}

impl std::fmt::Display for BlockReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockReason::RoleDenied { role } => write!(f, "role {role:?} may not run this event"),
            BlockReason::NotIncluded => write!(f, "event is not included"),
            BlockReason::ConditionUnmet { source, required_delay, elapsed: None } => {
                if *required_delay == 0 {
                    write!(f, "condition {source} has not run")
                } else {
                    write!(f, "condition {source} has not run (needs {required_delay} tick(s) after it)")
                }
            }
            BlockReason::ConditionUnmet { source, required_delay, elapsed: Some(elapsed) } => write!(
                f,
                "condition {source} ran {elapsed} tick(s) ago, needs {required_delay}"
            ),
            BlockReason::MilestoneBlocked { source } => {
                write!(f, "milestone {source} is still pending")
            }
        }
    }
}

/// Result of an enabledness check: enabled exactly when no clause failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnabledVerdict {
    pub enabled: bool,
    pub blockers: Vec<BlockReason>,
}

impl EnabledVerdict {
    fn from_blockers(blockers: Vec<BlockReason>) -> EnabledVerdict {
        EnabledVerdict { enabled: blockers.is_empty(), blockers }
    }
}

/// An included event whose finite deadline was crossed by a permissive
/// time advance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverdueAlert {
    pub event: EventId,
    /// How far past the deadline the advance went.
    pub missed_by: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("unknown role {0:?}")]
    UnknownRole(String),
    #[error("event {event} is not enabled ({} blocker(s))", verdict.blockers.len())]
    NotEnabled { event: EventId, verdict: EnabledVerdict },
    #[error("input event {0} needs a value")]
    MissingInput(EventId),
    #[error("computation event {0} does not take a value")]
    UnexpectedInput(EventId),
    #[error("expression failed: {0}")]
    Expression(#[from] ExprError),
    #[error("advancing {ticks} ticks would cross deadlines of {}", format_ids(events))]
    DeadlineViolation { ticks: u64, events: Vec<EventId> },
    #[error("unknown group or event {0} referenced by a relation or group")]
    UnknownGroup(EventId),
    #[error("group {0} is nested inside itself")]
    CyclicNesting(EventId),
}

fn format_ids(ids: &[EventId]) -> String {
    let names: Vec<&str> = ids.iter().map(|id| id.as_str()).collect();
    names.join(", ")
}

impl DcrGraph {
    fn event_kind(&self, event: &EventId) -> Result<&EventKind, EngineError> {
        self.events
            .get(event)
            .map(|e| &e.kind)
            .ok_or_else(|| EngineError::UnknownEvent(event.clone()))
    }

    /// Checks whether `event` can run now for `role` (`None` bypasses the
    /// role clause; simulation convenience, never used by the monitor).
    /// Expects a flattened graph. The verdict lists every failed clause.
    pub fn is_enabled(
        &self,
        marking: &Marking,
        event: &EventId,
        role: Option<&str>,
    ) -> Result<EnabledVerdict, EngineError> {
        let decl = self
            .events
            .get(event)
            .ok_or_else(|| EngineError::UnknownEvent(event.clone()))?;
        if let Some(r) = role {
            if !self.roles.contains(r) {
                return Err(EngineError::UnknownRole(r.to_string()));
            }
        }

        let mut blockers = Vec::new();
        if let Some(r) = role {
            // Strict membership: an event labelled with no roles admits no
            // named role, only a role-free caller.
            if !decl.label.roles.contains(r) {
                blockers.push(BlockReason::RoleDenied { role: r.to_string() });
            }
        }
        if !marking.included.contains(event) {
            blockers.push(BlockReason::NotIncluded);
        }
        for rel in self.relations_into(RelationKind::Condition, event) {
            // A condition binds only while its source is included and its guard holds.
            if !marking.included.contains(&rel.source) {
                continue;
            }
            if !eval_guard(&rel.guard, marking)?.holds {
                continue;
            }
            let elapsed = marking.executed.get(&rel.source).copied();
            let met = elapsed.is_some_and(|t| t >= rel.effective_delay());
            if !met {
                blockers.push(BlockReason::ConditionUnmet {
                    source: rel.source.clone(),
                    required_delay: rel.effective_delay(),
                    elapsed,
                });
            }
        }
        for rel in self.relations_into(RelationKind::Milestone, event) {
            if !marking.included.contains(&rel.source) {
                continue;
            }
            if !eval_guard(&rel.guard, marking)?.holds {
                continue;
            }
            if marking.pending.contains_key(&rel.source) {
                blockers.push(BlockReason::MilestoneBlocked { source: rel.source.clone() });
            }
        }
        Ok(EnabledVerdict::from_blockers(blockers))
    }

    /// Executes `event` and returns the successor marking. Guards and the
    /// event's own computation are evaluated against the pre-execution
    /// marking, so the result does not depend on relation order. Input
    /// events require `input`; computation events refuse it.
    pub fn execute(
        &self,
        marking: &Marking,
        event: &EventId,
        role: Option<&str>,
        input: Option<Value>,
    ) -> Result<Marking, EngineError> {
        let verdict = self.is_enabled(marking, event, role)?;
        if !verdict.enabled {
            return Err(EngineError::NotEnabled { event: event.clone(), verdict });
        }
        let value = match (self.event_kind(event)?, input) {
            (EventKind::Input, Some(v)) => v,
            (EventKind::Input, None) => return Err(EngineError::MissingInput(event.clone())),
            (EventKind::Computation(_), Some(_)) => {
                return Err(EngineError::UnexpectedInput(event.clone()))
            }
            (EventKind::Computation(expr), None) => eval_expr(expr, marking)?,
        };

        // Evaluate every effect guard against the pre-execution marking first.
        let mut responses: Vec<(EventId, Deadline)> = Vec::new();
        let mut cancels: Vec<EventId> = Vec::new();
        let mut includes: BTreeSet<EventId> = BTreeSet::new();
        let mut excludes: BTreeSet<EventId> = BTreeSet::new();
        for rel in self.relations.iter().filter(|r| &r.source == event) {
            match rel.kind {
                RelationKind::Response | RelationKind::Cancel
                | RelationKind::Include | RelationKind::Exclude => {
                    if !eval_guard(&rel.guard, marking)?.holds {
                        continue;
                    }
                }
                RelationKind::Condition | RelationKind::Milestone => continue,
            }
            match rel.kind {
                RelationKind::Response => {
                    responses.push((rel.target.clone(), rel.effective_deadline()))
                }
                RelationKind::Cancel => cancels.push(rel.target.clone()),
                RelationKind::Include => {
                    includes.insert(rel.target.clone());
                }
                RelationKind::Exclude => {
                    excludes.insert(rel.target.clone());
                }
                _ => unreachable!(),
            }
        }

        let mut next = marking.clone();
        next.values.insert(event.clone(), value);
        next.executed.insert(event.clone(), 0);
        // Running an event discharges its own obligation.
        next.pending.remove(event);
        // New obligations; an existing tighter deadline survives.
        for (target, deadline) in responses {
            let merged = match next.pending.get(&target) {
                Some(existing) => (*existing).min(deadline),
                None => deadline,
            };
            next.pending.insert(target, merged);
        }
        // Cancellation wins over any response from the same execution.
        for target in cancels {
            next.pending.remove(&target);
        }
        // Inclusion wins over exclusion of the same target.
        for target in &excludes {
            next.included.remove(target);
        }
        for target in includes {
            next.included.insert(target);
        }
        Ok(next)
    }

    /// Advances time by `n` ticks: every executed-time grows by `n`, every
    /// finite deadline shrinks by `n` (floored at 0). In `Strict` mode the
    /// advance is refused if an included event's finite deadline would be
    /// crossed; in `Permissive` mode it proceeds and reports each lapse.
    pub fn advance_time(
        &self,
        marking: &Marking,
        n: u64,
        mode: TimeMode,
    ) -> Result<(Marking, Vec<OverdueAlert>), EngineError> {
        let crossed: Vec<(EventId, u64)> = marking
            .pending
            .iter()
            .filter_map(|(id, deadline)| match deadline {
                Deadline::Finite(d) if *d < n && marking.included.contains(id) => {
                    Some((id.clone(), n - d))
                }
                _ => None,
            })
            .collect();
        if mode == TimeMode::Strict && !crossed.is_empty() {
            return Err(EngineError::DeadlineViolation {
                ticks: n,
                events: crossed.into_iter().map(|(id, _)| id).collect(),
            });
        }
        let mut next = marking.clone();
        for elapsed in next.executed.values_mut() {
            *elapsed = elapsed.saturating_add(n);
        }
        for deadline in next.pending.values_mut() {
            if let Deadline::Finite(d) = deadline {
                *deadline = Deadline::Finite(d.saturating_sub(n));
            }
        }
        let alerts = crossed
            .into_iter()
            .map(|(event, missed_by)| OverdueAlert { event, missed_by })
            .collect();
        Ok((next, alerts))
    }

    /// A marking is accepting when no included event still owes a response.
    pub fn is_accepting(&self, marking: &Marking) -> bool {
        marking
            .included
            .iter()
            .all(|id| !marking.pending.contains_key(id))
    }

    /// Every declared event enabled for `role`. Unlike [`DcrGraph::is_enabled`]
    /// this never errors on an undeclared role: such a role matches no label,
    /// so nothing is enabled for it. Guard failures still propagate.
    pub fn enabled_events(
        &self,
        marking: &Marking,
        role: Option<&str>,
    ) -> Result<BTreeSet<EventId>, EngineError> {
        let mut out = BTreeSet::new();
        for (id, decl) in &self.events {
            if let Some(r) = role {
                if !decl.label.roles.contains(r) {
                    continue;
                }
            }
            if self.is_enabled_unchecked(marking, id)? {
                out.insert(id.clone());
            }
        }
        Ok(out)
    }

    /// Enabledness clauses (b)-(d) only; role is handled by the caller.
    fn is_enabled_unchecked(&self, marking: &Marking, event: &EventId) -> Result<bool, EngineError> {
        if !marking.included.contains(event) {
            return Ok(false);
        }
        for rel in self.relations_into(RelationKind::Condition, event) {
            if !marking.included.contains(&rel.source) || !eval_guard(&rel.guard, marking)?.holds {
                continue;
            }
            let met = marking
                .executed
                .get(&rel.source)
                .is_some_and(|t| *t >= rel.effective_delay());
            if !met {
                return Ok(false);
            }
        }
        for rel in self.relations_into(RelationKind::Milestone, event) {
            if !marking.included.contains(&rel.source) || !eval_guard(&rel.guard, marking)?.holds {
                continue;
            }
            if marking.pending.contains_key(&rel.source) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Replaces every relation whose endpoint names a group with one
    /// relation per member event (members may be nested groups), preserving
    /// kind, guard, delay, and deadline. The result carries no groups and
    /// flattening it again is the identity.
    pub fn flatten(&self) -> Result<DcrGraph, EngineError> {
        // Resolve each group to its transitive event members once.
        let mut resolved: BTreeMap<EventId, BTreeSet<EventId>> = BTreeMap::new();
        for name in self.groups.keys() {
            let mut events = BTreeSet::new();
            let mut in_progress = BTreeSet::new();
            self.resolve_group(name, &mut events, &mut in_progress, &resolved)?;
            resolved.insert(name.clone(), events);
        }

        let expand = |endpoint: &EventId| -> Result<Vec<EventId>, EngineError> {
            if self.events.contains_key(endpoint) {
                Ok(vec![endpoint.clone()])
            } else if let Some(members) = resolved.get(endpoint) {
                Ok(members.iter().cloned().collect())
            } else {
                Err(EngineError::UnknownGroup(endpoint.clone()))
            }
        };

        let mut relations = Vec::new();
        for rel in &self.relations {
            for source in expand(&rel.source)? {
                for target in expand(&rel.target)? {
                    relations.push(Relation {
                        kind: rel.kind,
                        source: source.clone(),
                        target,
                        guard: rel.guard.clone(),
                        delay: rel.delay,
                        deadline: rel.deadline,
                    });
                }
            }
        }
        Ok(DcrGraph {
            events: self.events.clone(),
            relations,
            groups: BTreeMap::new(),
            roles: self.roles.clone(),
        })
    }

    fn resolve_group(
        &self,
        name: &EventId,
        events: &mut BTreeSet<EventId>,
        in_progress: &mut BTreeSet<EventId>,
        done: &BTreeMap<EventId, BTreeSet<EventId>>,
    ) -> Result<(), EngineError> {
        if !in_progress.insert(name.clone()) {
            return Err(EngineError::CyclicNesting(name.clone()));
        }
        let members = self
            .groups
            .get(name)
            .ok_or_else(|| EngineError::UnknownGroup(name.clone()))?;
        for member in members {
            if self.events.contains_key(member) {
                events.insert(member.clone());
            } else if let Some(already) = done.get(member) {
                events.extend(already.iter().cloned());
            } else if self.groups.contains_key(member) {
                self.resolve_group(member, events, in_progress, done)?;
            } else {
                return Err(EngineError::UnknownGroup(member.clone()));
            }
        }
        in_progress.remove(name);
        Ok(())
    }
}

/// A flattened graph with a current marking; the unit the monitor and the
/// HTTP service operate on.
#[derive(Debug, Clone)]
pub struct Instance {
    graph: DcrGraph,
    marking: Marking,
}

impl Instance {
    /// Flattens `graph` and pairs it with `initial`.
    pub fn new(graph: DcrGraph, initial: Marking) -> Result<Instance, EngineError> {
        Ok(Instance { graph: graph.flatten()?, marking: initial })
    }

    pub fn graph(&self) -> &DcrGraph {
        &self.graph
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn set_marking(&mut self, marking: Marking) {
        self.marking = marking;
    }

    pub fn is_enabled(&self, event: &EventId, role: Option<&str>) -> Result<EnabledVerdict, EngineError> {
        self.graph.is_enabled(&self.marking, event, role)
    }

    pub fn enabled_events(&self, role: Option<&str>) -> Result<BTreeSet<EventId>, EngineError> {
        self.graph.enabled_events(&self.marking, role)
    }

    pub fn execute(
        &mut self,
        event: &EventId,
        role: Option<&str>,
        input: Option<Value>,
    ) -> Result<(), EngineError> {
        self.marking = self.graph.execute(&self.marking, event, role, input)?;
        Ok(())
    }

    pub fn advance(&mut self, n: u64, mode: TimeMode) -> Result<Vec<OverdueAlert>, EngineError> {
        let (next, alerts) = self.graph.advance_time(&self.marking, n, mode)?;
        self.marking = next;
        Ok(alerts)
    }

    pub fn is_accepting(&self) -> bool {
        self.graph.is_accepting(&self.marking)
    }
}
