//! Declarative scenario files: a model plus a scripted sequence of
//! assertions and actions, optionally preceded by a monitored trace
//! replay. Used to pin down the behavioral contract of each shipped
//! pattern model in a form that is also runnable documentation.
//!
//! File shape:
//!
//! ```json
//! {
//!   "name": "escrow refuses early release",
//!   "model": "../models/escrow.json",
//!   "mapping": "../mappings/escrow.json",
//!   "trace": "../traces/escrow_faulty.jsonl",
//!   "steps": [
//!     { "expect_alert": { "type": "step_violation", "event": "releaseBySender" } },
//!     { "assert_accepting": false },
//!     { "assert_enabled": { "event": "withdrawFromEscrow", "role": "receiver", "enabled": false } }
//!   ]
//! }
//! ```
//!
//! When `trace` is present the monitor replays it first; `expect_alert`
//! steps then consume the produced alerts in order, and every alert must
//! be consumed by the end. The action steps (`exec`, `advance`) apply to
//! the same instance, continuing from where the replay stopped.

use crate::engine::{BlockReason, EngineError, TimeMode};
use crate::expr::{parse_duration, Value};
use crate::graph::EventId;
use crate::model::{load_model, validate_model, ModelError};
use crate::monitor::{
    load_mapping, run_monitor_on, validate_mapping, Alert, AlertKind, MonitorError,
};
use crate::trace::read_trace;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    model: String,
    #[serde(default)]
    mapping: Option<String>,
    #[serde(default)]
    trace: Option<String>,
    steps: Vec<StepFile>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum StepFile {
    AssertEnabled {
        event: String,
        #[serde(default)]
        role: Option<String>,
        enabled: bool,
        #[serde(default)]
        blockers: Option<Vec<BlockerExpect>>,
    },
    Exec {
        event: String,
        #[serde(default)]
        role: Option<String>,
        #[serde(default)]
        value: Option<Value>,
        expect: ExecExpect,
        #[serde(default)]
        blockers: Option<Vec<BlockerExpect>>,
    },
    Advance {
        ticks: TicksSpec,
        #[serde(default)]
        mode: Option<TimeMode>,
        #[serde(default)]
        expect_overdue: Vec<String>,
    },
    AssertAccepting(bool),
    ExpectAlert(AlertExpect),
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum ExecExpect {
    Ok,
    Refused,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TicksSpec {
    Number(u64),
    Text(String),
}

/// Loose pattern over one blocker: the reason must match, source and role
/// only when given.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockerExpect {
    reason: String,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    role: Option<String>,
}

/// Loose pattern over one alert.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlertExpect {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    event: Option<String>,
    #[serde(default)]
    at: Option<AtExpect>,
    #[serde(default)]
    blockers: Option<Vec<BlockerExpect>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtExpect {
    block_number: u64,
    tx_index: u32,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub name: String,
    pub steps_run: usize,
    /// Alerts produced by the trace replay phase, if any.
    pub alerts: Vec<Alert>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Load(#[from] ModelError),
    #[error("trace replay failed: {0}")]
    Monitor(#[from] MonitorError),
    #[error("step {step}: {message}")]
    Failed { step: usize, message: String },
}

fn blocker_matches(expect: &BlockerExpect, actual: &BlockReason) -> Result<(), String> {
    let (name, source, role) = match actual {
        BlockReason::RoleDenied { role } => ("role_denied", None, Some(role.as_str())),
        BlockReason::NotIncluded => ("not_included", None, None),
        BlockReason::ConditionUnmet { source, .. } => ("condition_unmet", Some(source), None),
        BlockReason::MilestoneBlocked { source } => ("milestone_blocked", Some(source), None),
    };
    if expect.reason != name {
        return Err(format!("expected blocker {:?}, got {:?}", expect.reason, name));
    }
    if let Some(want) = &expect.source {
        match source {
            Some(actual) if actual.as_str() == want => {}
            _ => return Err(format!("expected blocker source {want:?}, got {source:?}")),
        }
    }
    if let Some(want) = &expect.role {
        match role {
            Some(actual) if actual == want => {}
            _ => return Err(format!("expected blocker role {want:?}, got {role:?}")),
        }
    }
    Ok(())
}

fn blockers_match(expect: &[BlockerExpect], actual: &[BlockReason]) -> Result<(), String> {
    if expect.len() != actual.len() {
        return Err(format!(
            "expected {} blocker(s), got {}: {actual:?}",
            expect.len(),
            actual.len()
        ));
    }
    for (e, a) in expect.iter().zip(actual) {
        blocker_matches(e, a)?;
    }
    Ok(())
}

fn alert_matches(expect: &AlertExpect, actual: &Alert) -> Result<(), String> {
    if expect.kind != actual.kind.name() {
        return Err(format!(
            "expected alert type {:?}, got {:?}",
            expect.kind,
            actual.kind.name()
        ));
    }
    if let Some(want) = &expect.event {
        let event = match &actual.kind {
            AlertKind::StepViolation { event, .. } => Some(event),
            AlertKind::DeadlineOverdue { event, .. } => Some(event),
            _ => None,
        };
        match event {
            Some(actual) if actual.as_str() == want => {}
            _ => return Err(format!("expected alert on event {want:?}, got {event:?}")),
        }
    }
    if let Some(at) = &expect.at {
        if (actual.provenance.block_number, actual.provenance.tx_index)
            != (at.block_number, at.tx_index)
        {
            return Err(format!(
                "expected alert at block {} index {}, got block {} index {}",
                at.block_number, at.tx_index, actual.provenance.block_number, actual.provenance.tx_index
            ));
        }
    }
    if let Some(expected_blockers) = &expect.blockers {
        match &actual.kind {
            AlertKind::StepViolation { verdict, .. } => {
                blockers_match(expected_blockers, &verdict.blockers)?
            }
            other => {
                return Err(format!(
                    "blockers can only be matched on step_violation alerts, got {:?}",
                    other.name()
                ))
            }
        }
    }
    Ok(())
}

fn resolve(base: &Path, relative: &str) -> PathBuf {
    base.parent().unwrap_or(Path::new(".")).join(relative)
}

fn load_error(path: &Path, message: String) -> ScenarioError {
    ScenarioError::Load(ModelError::Io { path: path.display().to_string(), message })
}

/// Loads and runs one scenario file. The first failed step aborts the run;
/// its message carries the marking at that point.
pub fn run_scenario(path: impl AsRef<Path>) -> Result<ScenarioOutcome, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| load_error(path, e.to_string()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| load_error(path, format!("bad scenario file: {e}")))?;

    let model_path = resolve(path, &file.model);
    let document = load_model(&model_path)?;
    let diagnostics = validate_model(&document);
    if !diagnostics.is_empty() {
        return Err(MonitorError::Model(diagnostics).into());
    }
    let mut instance = document.instantiate().map_err(MonitorError::Engine)?;

    let mut alerts: Vec<Alert> = Vec::new();
    if let Some(trace_rel) = &file.trace {
        let mapping_rel = file.mapping.as_ref().ok_or_else(|| {
            load_error(path, "scenario has a trace but no mapping".into())
        })?;
        let config = load_mapping(resolve(path, mapping_rel))?;
        let diagnostics = validate_mapping(&config, &document);
        if !diagnostics.is_empty() {
            return Err(MonitorError::Mapping(diagnostics).into());
        }
        let source = read_trace(resolve(path, trace_rel)).map_err(MonitorError::Trace)?;
        run_monitor_on(&mut instance, source, &config, |alert| alerts.push(alert.clone()))?;
    }

    let mut alert_cursor = 0usize;
    let fail = |step: usize, message: String, instance: &crate::engine::Instance| {
        let marking =
            serde_json::to_string_pretty(instance.marking()).expect("marking serializes");
        ScenarioError::Failed { step, message: format!("{message}\nmarking: {marking}") }
    };

    for (index, step) in file.steps.iter().enumerate() {
        match step {
            StepFile::AssertEnabled { event, role, enabled, blockers } => {
                let event = EventId::from(event.as_str());
                let verdict = instance
                    .is_enabled(&event, role.as_deref())
                    .map_err(|e| fail(index, e.to_string(), &instance))?;
                if verdict.enabled != *enabled {
                    return Err(fail(
                        index,
                        format!(
                            "expected {event} enabled={enabled}, got {} (blockers: {:?})",
                            verdict.enabled, verdict.blockers
                        ),
                        &instance,
                    ));
                }
                if let Some(expected) = blockers {
                    blockers_match(expected, &verdict.blockers)
                        .map_err(|m| fail(index, m, &instance))?;
                }
            }
            StepFile::Exec { event, role, value, expect, blockers } => {
                let event = EventId::from(event.as_str());
                let result = instance.execute(&event, role.as_deref(), value.clone());
                match (expect, result) {
                    (ExecExpect::Ok, Ok(())) => {}
                    (ExecExpect::Ok, Err(e)) => {
                        return Err(fail(index, format!("expected {event} to run: {e}"), &instance))
                    }
                    (ExecExpect::Refused, Err(EngineError::NotEnabled { verdict, .. })) => {
                        if let Some(expected) = blockers {
                            blockers_match(expected, &verdict.blockers)
                                .map_err(|m| fail(index, m, &instance))?;
                        }
                    }
                    (ExecExpect::Refused, Err(e)) => {
                        return Err(fail(
                            index,
                            format!("expected a refusal of {event}, got error: {e}"),
                            &instance,
                        ))
                    }
                    (ExecExpect::Refused, Ok(())) => {
                        return Err(fail(
                            index,
                            format!("expected {event} to be refused but it ran"),
                            &instance,
                        ))
                    }
                }
            }
            StepFile::Advance { ticks, mode, expect_overdue } => {
                let n = match ticks {
                    TicksSpec::Number(n) => *n,
                    TicksSpec::Text(text) => parse_duration(text)
                        .map_err(|e| fail(index, e.to_string(), &instance))?,
                };
                let overdue = instance
                    .advance(n, mode.unwrap_or(TimeMode::Permissive))
                    .map_err(|e| fail(index, e.to_string(), &instance))?;
                let got: Vec<&str> = overdue.iter().map(|o| o.event.as_str()).collect();
                let want: Vec<&str> = expect_overdue.iter().map(String::as_str).collect();
                if got != want {
                    return Err(fail(
                        index,
                        format!("expected overdue {want:?}, got {got:?}"),
                        &instance,
                    ));
                }
            }
            StepFile::AssertAccepting(expected) => {
                let actual = instance.is_accepting();
                if actual != *expected {
                    return Err(fail(
                        index,
                        format!("expected accepting={expected}, got {actual}"),
                        &instance,
                    ));
                }
            }
            StepFile::ExpectAlert(expect) => {
                let actual = alerts.get(alert_cursor).ok_or_else(|| {
                    fail(index, format!("expected a {:?} alert but none are left", expect.kind), &instance)
                })?;
                alert_matches(expect, actual).map_err(|m| fail(index, m, &instance))?;
                alert_cursor += 1;
            }
        }
    }

    if alert_cursor < alerts.len() {
        let leftover: Vec<&str> = alerts[alert_cursor..].iter().map(|a| a.kind.name()).collect();
        return Err(fail(
            file.steps.len(),
            format!("replay produced {} unexpected alert(s): {leftover:?}", leftover.len()),
            &instance,
        ));
    }

    Ok(ScenarioOutcome { name: file.name, steps_run: file.steps.len(), alerts })
}
