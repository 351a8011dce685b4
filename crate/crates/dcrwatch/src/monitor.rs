//! Runtime conformance monitor: replays a transaction trace against a
//! process model and reports every observed deviation as an alert.
//!
//! The pipeline per transaction: advance model time to the transaction's
//! block timestamp (permissively, so missed deadlines become alerts rather
//! than hard stops), translate the calldata into a model step via the
//! mapping config, then execute that step. A step the model refuses keeps
//! the current marking and produces an alert; monitoring continues so one
//! deviation does not hide later ones.

use crate::abi::{decode_calldata, AbiError, FunctionSig};
use crate::engine::{EnabledVerdict, EngineError, Instance, TimeMode};
use crate::expr::Value;
use crate::graph::EventKind;
use crate::model::{Diagnostic, ModelDocument, ModelError};
use crate::trace::{TraceError, TraceSource, Transaction, TxStatus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::graph::EventId;

/// Where a mapped input event gets its value from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BindingRepr", into = "BindingRepr")]
pub enum Binding {
    /// The transaction's wei value.
    TxValue,
    /// The n-th decoded calldata argument (0-based).
    Arg(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BindingRepr {
    Name(String),
    Arg { arg: usize },
}

impl TryFrom<BindingRepr> for Binding {
    type Error = String;
    fn try_from(repr: BindingRepr) -> Result<Binding, String> {
        match repr {
            BindingRepr::Name(s) if s == "value" => Ok(Binding::TxValue),
            BindingRepr::Name(s) => Err(format!("bind must be \"value\" or {{\"arg\": n}}, got {s:?}")),
            BindingRepr::Arg { arg } => Ok(Binding::Arg(arg)),
        }
    }
}

impl From<Binding> for BindingRepr {
    fn from(b: Binding) -> BindingRepr {
        match b {
            Binding::TxValue => BindingRepr::Name("value".into()),
            Binding::Arg(arg) => BindingRepr::Arg { arg },
        }
    }
}

/// What to do with a transaction whose sender has no role mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SenderPolicyRepr", into = "SenderPolicyRepr")]
pub enum SenderPolicy {
    /// Alert and skip the step.
    Reject,
    /// Attribute the step to this role.
    DefaultRole(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SenderPolicyRepr {
    Name(String),
    Default { default_role: String },
}

impl TryFrom<SenderPolicyRepr> for SenderPolicy {
    type Error = String;
    fn try_from(repr: SenderPolicyRepr) -> Result<SenderPolicy, String> {
        match repr {
            SenderPolicyRepr::Name(s) if s == "reject" => Ok(SenderPolicy::Reject),
            SenderPolicyRepr::Name(s) => {
                Err(format!("unknown_sender must be \"reject\" or {{\"default_role\": r}}, got {s:?}"))
            }
            SenderPolicyRepr::Default { default_role } => Ok(SenderPolicy::DefaultRole(default_role)),
        }
    }
}

impl From<SenderPolicy> for SenderPolicyRepr {
    fn from(p: SenderPolicy) -> SenderPolicyRepr {
        match p {
            SenderPolicy::Reject => SenderPolicyRepr::Name("reject".into()),
            SenderPolicy::DefaultRole(r) => SenderPolicyRepr::Default { default_role: r },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimePolicy {
    /// Advance model time by block timestamp deltas (the first observed
    /// transaction sets the reference point; tick unit is seconds).
    AdvanceByTimestamps,
    /// Never advance time; only step order is checked.
    IgnoreTime,
}

/// One calldata-to-event mapping rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionMapping {
    pub signature: FunctionSig,
    pub event: EventId,
    pub bind: Option<Binding>,
}

/// How transactions of one contract translate to model steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingConfig {
    pub contract: String,
    pub functions: Vec<FunctionMapping>,
    /// Lowercased sender address to role.
    pub roles: BTreeMap<String, String>,
    pub unknown_sender: SenderPolicy,
    pub time_policy: TimePolicy,
    /// When true, a call to an unmapped selector is an alert instead of
    /// being skipped as out-of-scope.
    pub strict_unmapped: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingFile {
    contract: String,
    functions: Vec<FunctionFile>,
    #[serde(default)]
    roles: BTreeMap<String, String>,
    #[serde(default)]
    policies: Option<PoliciesFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    signature: String,
    event: String,
    #[serde(default)]
    bind: Option<Binding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoliciesFile {
    #[serde(default)]
    unknown_sender: Option<SenderPolicy>,
    #[serde(default)]
    time: Option<TimePolicy>,
    #[serde(default)]
    strict_unmapped: Option<bool>,
}

/// Parses a mapping config from JSON. Defaults: unknown senders are
/// rejected, time advances by timestamps, unmapped selectors are skipped.
pub fn parse_mapping(text: &str) -> Result<MappingConfig, ModelError> {
    let file: MappingFile = serde_json::from_str(text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Data {
            ModelError::Schema { path: "<document>".into(), message: e.to_string() }
        } else {
            ModelError::Syntax(e.to_string())
        }
    })?;
    let mut functions = Vec::with_capacity(file.functions.len());
    for (i, f) in file.functions.into_iter().enumerate() {
        let signature = FunctionSig::parse(&f.signature).map_err(|e| ModelError::Schema {
            path: format!("functions[{i}].signature"),
            message: e.to_string(),
        })?;
        functions.push(FunctionMapping {
            signature,
            event: EventId::from(f.event),
            bind: f.bind,
        });
    }
    let policies = file.policies.unwrap_or(PoliciesFile {
        unknown_sender: None,
        time: None,
        strict_unmapped: None,
    });
    Ok(MappingConfig {
        contract: file.contract,
        functions,
        roles: file
            .roles
            .into_iter()
            .map(|(addr, role)| (addr.to_ascii_lowercase(), role))
            .collect(),
        unknown_sender: policies.unknown_sender.unwrap_or(SenderPolicy::Reject),
        time_policy: policies.time.unwrap_or(TimePolicy::AdvanceByTimestamps),
        strict_unmapped: policies.strict_unmapped.unwrap_or(false),
    })
}

pub fn load_mapping(path: impl AsRef<Path>) -> Result<MappingConfig, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_mapping(&text)
}

fn is_address(s: &str) -> bool {
    s.len() == 42
        && s.starts_with("0x")
        && s[2..].bytes().all(|b| b.is_ascii_hexdigit())
}

/// Cross-checks a mapping against the model it will drive. Empty result
/// means consistent.
pub fn validate_mapping(config: &MappingConfig, document: &ModelDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |path: String, message: String| Diagnostic { path, message };
    if !is_address(&config.contract) {
        out.push(diag(
            "contract".into(),
            format!("{:?} is not a 0x-prefixed 20-byte hex address", config.contract),
        ));
    }
    let mut seen_selectors: BTreeMap<[u8; 4], usize> = BTreeMap::new();
    for (i, f) in config.functions.iter().enumerate() {
        let selector = f.signature.selector();
        if let Some(first) = seen_selectors.get(&selector) {
            out.push(diag(
                format!("functions[{i}].signature"),
                format!(
                    "selector 0x{} already mapped by functions[{first}]",
                    hex::encode(selector)
                ),
            ));
        } else {
            seen_selectors.insert(selector, i);
        }
        match document.graph.events.get(&f.event) {
            None => out.push(diag(
                format!("functions[{i}].event"),
                format!("event {} is not declared in the model", f.event),
            )),
            Some(event) => match (&event.kind, &f.bind) {
                (EventKind::Input, None) => out.push(diag(
                    format!("functions[{i}].bind"),
                    format!("input event {} needs a bind", f.event),
                )),
                (EventKind::Computation(_), Some(_)) => out.push(diag(
                    format!("functions[{i}].bind"),
                    format!("computation event {} does not take input", f.event),
                )),
                _ => {}
            },
        }
        if let Some(Binding::Arg(k)) = &f.bind {
            if *k >= f.signature.params.len() {
                out.push(diag(
                    format!("functions[{i}].bind"),
                    format!(
                        "argument index {k} out of range for {} ({} parameter(s))",
                        f.signature,
                        f.signature.params.len()
                    ),
                ));
            }
        }
    }
    for (addr, role) in &config.roles {
        if !is_address(addr) {
            out.push(diag(
                format!("roles.{addr}"),
                format!("{addr:?} is not a 0x-prefixed 20-byte hex address"),
            ));
        }
        if !document.graph.roles.contains(role) {
            out.push(diag(
                format!("roles.{addr}"),
                format!("role {role:?} is not declared in the model"),
            ));
        }
    }
    if let SenderPolicy::DefaultRole(role) = &config.unknown_sender {
        if !document.graph.roles.contains(role) {
            out.push(diag(
                "policies.unknown_sender".into(),
                format!("default role {role:?} is not declared in the model"),
            ));
        }
    }
    out
}

/// Which transaction an alert or step came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub block_number: u64,
    pub tx_index: u32,
    pub hash: String,
    pub timestamp: u64,
}

impl Provenance {
    pub fn of(tx: &Transaction) -> Provenance {
        Provenance {
            block_number: tx.block_number,
            tx_index: tx.tx_index,
            hash: tx.hash.clone(),
            timestamp: tx.timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AlertKind {
    /// The chain executed a step the model refuses.
    StepViolation { event: EventId, verdict: EnabledVerdict },
    /// The sender has no role mapping and the policy rejects unknowns.
    RoleViolation { sender: String },
    /// A call hit a selector outside the mapping (strict mode only).
    UnmappedFunction { selector: String },
    /// A response deadline passed before this transaction's block.
    DeadlineOverdue { event: EventId, missed_by: u64 },
    /// Calldata could not be decoded against the mapped signature.
    DecodeError { detail: String },
}

impl AlertKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlertKind::StepViolation { .. } => "step_violation",
            AlertKind::RoleViolation { .. } => "role_violation",
            AlertKind::UnmappedFunction { .. } => "unmapped_function",
            AlertKind::DeadlineOverdue { .. } => "deadline_overdue",
            AlertKind::DecodeError { .. } => "decode_error",
        }
    }
}

/// One reported deviation, with the transaction it was observed at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    #[serde(flatten)]
    pub kind: AlertKind,
    pub provenance: Provenance,
    pub message: String,
}

/// A transaction translated into model terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Translated {
    Step(ActivityStep),
    Skip(SkipReason),
    Alert(Alert),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// Reverted on chain, so it never happened from the model's view.
    Reverted,
    /// Calls a selector outside the mapping (out of modelled scope).
    Unmapped,
    /// Plain value transfer with no calldata.
    EmptyCalldata,
}

/// One model step derived from a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityStep {
    pub event: EventId,
    pub role: Option<String>,
    pub input: Option<Value>,
    pub provenance: Provenance,
}

fn blockers_summary(verdict: &EnabledVerdict) -> String {
    let parts: Vec<String> = verdict.blockers.iter().map(|b| b.to_string()).collect();
    parts.join("; ")
}

/// Translates one transaction into a model step, a skip, or an alert.
/// Assumes the transaction is already known to target the mapped contract.
pub fn translate(tx: &Transaction, config: &MappingConfig) -> Translated {
    let selectors: Vec<[u8; 4]> = config.functions.iter().map(|f| f.signature.selector()).collect();
    translate_with(tx, config, &selectors)
}

/// [`translate`] with the mapping's selectors precomputed, so a replay
/// loop hashes each signature once instead of once per transaction.
fn translate_with(tx: &Transaction, config: &MappingConfig, selectors: &[[u8; 4]]) -> Translated {
    let provenance = Provenance::of(tx);
    if tx.status == TxStatus::Reverted {
        return Translated::Skip(SkipReason::Reverted);
    }
    if tx.input.is_empty() {
        return Translated::Skip(SkipReason::EmptyCalldata);
    }
    if tx.input.len() < 4 {
        return Translated::Alert(Alert {
            kind: AlertKind::DecodeError {
                detail: format!("calldata is {} byte(s), too short for a selector", tx.input.len()),
            },
            message: format!(
                "transaction {} carries truncated calldata ({} byte(s))",
                tx.hash,
                tx.input.len()
            ),
            provenance,
        });
    }
    let selector: [u8; 4] = tx.input[..4].try_into().expect("length checked");
    let mapping = selectors
        .iter()
        .position(|s| *s == selector)
        .map(|i| &config.functions[i]);
    let mapping = match mapping {
        Some(m) => m,
        None if config.strict_unmapped => {
            return Translated::Alert(Alert {
                kind: AlertKind::UnmappedFunction { selector: format!("0x{}", hex::encode(selector)) },
                message: format!(
                    "transaction {} calls selector 0x{} which no mapping covers",
                    tx.hash,
                    hex::encode(selector)
                ),
                provenance,
            });
        }
        None => return Translated::Skip(SkipReason::Unmapped),
    };
    let call = match decode_calldata(&tx.input, &mapping.signature) {
        Ok(call) => call,
        Err(e) => {
            return Translated::Alert(Alert {
                kind: AlertKind::DecodeError { detail: e.to_string() },
                message: format!(
                    "transaction {} does not decode as {}: {}",
                    tx.hash, mapping.signature, e
                ),
                provenance,
            });
        }
    };
    let sender = tx.from.to_ascii_lowercase();
    let role = match config.roles.get(&sender) {
        Some(role) => role.clone(),
        None => match &config.unknown_sender {
            SenderPolicy::DefaultRole(role) => role.clone(),
            SenderPolicy::Reject => {
                return Translated::Alert(Alert {
                    kind: AlertKind::RoleViolation { sender: tx.from.clone() },
                    message: format!("sender {} of transaction {} has no role mapping", tx.from, tx.hash),
                    provenance,
                });
            }
        },
    };
    let input = match &mapping.bind {
        None => None,
        Some(Binding::TxValue) => Some(Value::Int(tx.value.clone())),
        Some(Binding::Arg(k)) => match call.args.get(*k) {
            Some(v) => Some(v.clone()),
            None => {
                return Translated::Alert(Alert {
                    kind: AlertKind::DecodeError {
                        detail: format!("bind references argument {k} but the call has {}", call.args.len()),
                    },
                    message: format!(
                        "transaction {}: bind argument {k} out of range for {}",
                        tx.hash, mapping.signature
                    ),
                    provenance,
                });
            }
        },
    };
    Translated::Step(ActivityStep { event: mapping.event.clone(), role: Some(role), input, provenance })
}

/// Runs one translated step against the instance. A refusal leaves the
/// marking untouched and comes back as a step violation alert; hard
/// errors (unknown event, bad input arity, expression failure) abort the
/// replay because they mean model and mapping disagree.
pub fn process_step(instance: &mut Instance, step: &ActivityStep) -> Result<Option<Alert>, EngineError> {
    match instance.execute(&step.event, step.role.as_deref(), step.input.clone()) {
        Ok(()) => Ok(None),
        Err(EngineError::NotEnabled { event, verdict }) => {
            let summary = blockers_summary(&verdict);
            Ok(Some(Alert {
                kind: AlertKind::StepViolation { event: event.clone(), verdict },
                message: format!(
                    "transaction {} executed {} but the model refuses it: {}",
                    step.provenance.hash, event, summary
                ),
                provenance: step.provenance.clone(),
            }))
        }
        Err(e) => Err(e),
    }
}

/// Counts of alerts by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertCounts {
    pub step_violation: u64,
    pub role_violation: u64,
    pub unmapped_function: u64,
    pub deadline_overdue: u64,
    pub decode_error: u64,
}

impl AlertCounts {
    pub fn total(&self) -> u64 {
        self.step_violation
            + self.role_violation
            + self.unmapped_function
            + self.deadline_overdue
            + self.decode_error
    }

    fn record(&mut self, kind: &AlertKind) {
        match kind {
            AlertKind::StepViolation { .. } => self.step_violation += 1,
            AlertKind::RoleViolation { .. } => self.role_violation += 1,
            AlertKind::UnmappedFunction { .. } => self.unmapped_function += 1,
            AlertKind::DeadlineOverdue { .. } => self.deadline_overdue += 1,
            AlertKind::DecodeError { .. } => self.decode_error += 1,
        }
    }
}

/// What a monitoring run saw, in aggregate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorSummary {
    /// Transactions addressed to the monitored contract.
    pub transactions_seen: u64,
    pub steps_executed: u64,
    pub skipped_reverted: u64,
    pub skipped_unmapped: u64,
    pub skipped_empty: u64,
    pub alerts: AlertCounts,
    /// Whether the final marking is accepting (no included event still pending).
    pub final_accepting: bool,
    /// The first transaction at which any alert fired.
    pub diverged_at: Option<Provenance>,
}

impl MonitorSummary {
    pub fn clean(&self) -> bool {
        self.alerts.total() == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MonitorError {
    #[error("model failed validation: {}", format_diagnostics(.0))]
    Model(Vec<Diagnostic>),
    #[error("mapping failed validation: {}", format_diagnostics(.0))]
    Mapping(Vec<Diagnostic>),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Abi(#[from] AbiError),
}

fn format_diagnostics(diagnostics: &[Diagnostic]) -> String {
    let parts: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
    parts.join("; ")
}

/// Validates model and mapping, instantiates the model, and replays the
/// trace. Each alert is handed to `sink` as it fires, in trace order.
pub fn run_monitor(
    source: TraceSource,
    config: &MappingConfig,
    document: &ModelDocument,
    sink: impl FnMut(&Alert),
) -> Result<MonitorSummary, MonitorError> {
    let diagnostics = crate::model::validate_model(document);
    if !diagnostics.is_empty() {
        return Err(MonitorError::Model(diagnostics));
    }
    let diagnostics = validate_mapping(config, document);
    if !diagnostics.is_empty() {
        return Err(MonitorError::Mapping(diagnostics));
    }
    let mut instance = document.instantiate()?;
    run_monitor_on(&mut instance, source, config, sink)
}

/// Replay core, exposed separately so callers can inspect the final
/// instance state. Skips validation; use [`run_monitor`] unless the model
/// and mapping are already known to be consistent.
pub fn run_monitor_on(
    instance: &mut Instance,
    source: TraceSource,
    config: &MappingConfig,
    mut sink: impl FnMut(&Alert),
) -> Result<MonitorSummary, MonitorError> {
    let mut summary = MonitorSummary::default();
    let mut last_timestamp: Option<u64> = None;
    let selectors: Vec<[u8; 4]> = config.functions.iter().map(|f| f.signature.selector()).collect();
    let mut emit = |summary: &mut MonitorSummary, alert: Alert| {
        summary.alerts.record(&alert.kind);
        if summary.diverged_at.is_none() {
            summary.diverged_at = Some(alert.provenance.clone());
        }
        sink(&alert);
    };
    for item in source.filter_to_contract(&config.contract) {
        let tx = item?;
        summary.transactions_seen += 1;
        if config.time_policy == TimePolicy::AdvanceByTimestamps {
            // First transaction anchors the clock; stream ordering
            // guarantees the delta is non-negative.
            let delta = last_timestamp.map_or(0, |prev| tx.timestamp - prev);
            last_timestamp = Some(tx.timestamp);
            if delta > 0 {
                let provenance = Provenance::of(&tx);
                for overdue in instance.advance(delta, TimeMode::Permissive)? {
                    let alert = Alert {
                        kind: AlertKind::DeadlineOverdue {
                            event: overdue.event.clone(),
                            missed_by: overdue.missed_by,
                        },
                        message: format!(
                            "response deadline for {} passed {} tick(s) before transaction {}",
                            overdue.event, overdue.missed_by, tx.hash
                        ),
                        provenance: provenance.clone(),
                    };
                    emit(&mut summary, alert);
                }
            }
        }
        match translate_with(&tx, config, &selectors) {
            Translated::Skip(SkipReason::Reverted) => summary.skipped_reverted += 1,
            Translated::Skip(SkipReason::Unmapped) => summary.skipped_unmapped += 1,
            Translated::Skip(SkipReason::EmptyCalldata) => summary.skipped_empty += 1,
            Translated::Alert(alert) => emit(&mut summary, alert),
            Translated::Step(step) => match process_step(instance, &step)? {
                None => summary.steps_executed += 1,
                Some(alert) => emit(&mut summary, alert),
            },
        }
    }
    summary.final_accepting = instance.is_accepting();
    Ok(summary)
}
