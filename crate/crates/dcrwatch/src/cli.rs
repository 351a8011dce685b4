//! Command-line interface. The binary is a one-line shim over [`run`].
//!
//! Exit codes: 0 clean, 1 the input was understood but found wanting
//! (validation diagnostics, conformance alerts, failed scenarios), 2
//! operational trouble (missing files, unparseable input, trace errors).

use crate::model::{load_model, validate_model};
use crate::monitor::{self, load_mapping, run_monitor, TimePolicy};
use crate::scenario::{run_scenario, ScenarioError};
use crate::trace::read_trace;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dcrwatch",
    version,
    about = "Timed DCR graph engine and chain trace conformance monitor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Validate {
        /// Model JSON file.
        model: PathBuf,
    },
    /// Load a model and explore it interactively on stdin/stdout.
    Simulate {
        /// Model JSON file.
        model: PathBuf,
        /// Role the session acts as (default: bypass role checks).
        #[arg(long)]
        role: Option<String>,
    },
    /// Replay a transaction trace against a model and report deviations.
    Check {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Mapping config JSON file.
        #[arg(long)]
        mapping: PathBuf,
        /// Trace JSONL file.
        #[arg(long)]
        trace: PathBuf,
        /// Write alerts as JSONL here instead of stderr
        /// (env DCRWATCH_ALERTS_OUT works too).
        #[arg(long)]
        alerts_out: Option<PathBuf>,
        /// Alert on calls to selectors outside the mapping.
        #[arg(long)]
        strict_unmapped: bool,
        /// Do not advance model time from block timestamps.
        #[arg(long)]
        ignore_time: bool,
    },
    /// Serve the engine over HTTP.
    Serve {
        /// Address to bind.
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Run scripted scenario files.
    Scenario {
        /// Scenario JSON files.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

const OK: u8 = 0;
const FINDINGS: u8 = 1;
const TROUBLE: u8 = 2;

/// Parses std::env args and dispatches. Returns the process exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { model } => cmd_validate(&model),
        Command::Simulate { model, role } => cmd_simulate(&model, role.as_deref()),
        Command::Check { model, mapping, trace, alerts_out, strict_unmapped, ignore_time } => {
            cmd_check(&model, &mapping, &trace, alerts_out, strict_unmapped, ignore_time)
        }
        Command::Serve { bind } => cmd_serve(&bind),
        Command::Scenario { paths } => cmd_scenario(&paths),
    };
    ExitCode::from(code)
}

fn operational(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    TROUBLE
}

fn cmd_validate(model: &PathBuf) -> u8 {
    let document = match load_model(model) {
        Ok(doc) => doc,
        Err(crate::model::ModelError::Io { path, message }) => {
            return operational(format!("cannot read {path}: {message}"))
        }
        Err(e) => {
            eprintln!("invalid: {e}");
            return FINDINGS;
        }
    };
    let diagnostics = validate_model(&document);
    if diagnostics.is_empty() {
        println!(
            "ok: {} event(s), {} relation(s), {} role(s)",
            document.graph.events.len(),
            document.graph.relations.len(),
            document.graph.roles.len()
        );
        OK
    } else {
        for d in &diagnostics {
            println!("{d}");
        }
        FINDINGS
    }
}

fn cmd_simulate(model: &PathBuf, role: Option<&str>) -> u8 {
    let document = match load_model(model) {
        Ok(doc) => doc,
        Err(crate::model::ModelError::Io { path, message }) => {
            return operational(format!("cannot read {path}: {message}"))
        }
        Err(e) => {
            eprintln!("invalid: {e}");
            return FINDINGS;
        }
    };
    let diagnostics = validate_model(&document);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("{d}");
        }
        return FINDINGS;
    }
    if let Some(role) = role {
        if !document.graph.roles.contains(role) {
            eprintln!("invalid: role {role:?} is not declared in the model");
            return FINDINGS;
        }
    }
    let mut instance = match document.instantiate() {
        Ok(instance) => instance,
        Err(e) => {
            eprintln!("invalid: {e}");
            return FINDINGS;
        }
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    match crate::repl::run(&mut instance, role, stdin.lock(), stdout.lock()) {
        Ok(()) => OK,
        Err(e) => operational(e),
    }
}

fn alert_writer(alerts_out: Option<PathBuf>) -> Result<Box<dyn Write>, String> {
    let from_env = std::env::var_os("DCRWATCH_ALERTS_OUT").map(PathBuf::from);
    match alerts_out.or(from_env) {
        Some(path) => std::fs::File::create(&path)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => Ok(Box::new(std::io::stderr())),
    }
}

fn cmd_check(
    model: &PathBuf,
    mapping: &PathBuf,
    trace: &PathBuf,
    alerts_out: Option<PathBuf>,
    strict_unmapped: bool,
    ignore_time: bool,
) -> u8 {
    let document = match load_model(model) {
        Ok(doc) => doc,
        Err(e) => return operational(e),
    };
    let mut config = match load_mapping(mapping) {
        Ok(config) => config,
        Err(e) => return operational(e),
    };
    if strict_unmapped {
        config.strict_unmapped = true;
    }
    if ignore_time {
        config.time_policy = TimePolicy::IgnoreTime;
    }
    let source = match read_trace(trace) {
        Ok(source) => source,
        Err(e) => return operational(e),
    };
    let mut sink = match alert_writer(alerts_out) {
        Ok(sink) => sink,
        Err(message) => return operational(message),
    };
    let mut sink_error = None;
    let result = run_monitor(source, &config, &document, |alert| {
        let line = serde_json::to_string(alert).expect("alerts serialize");
        if let Err(e) = writeln!(sink, "{line}") {
            sink_error.get_or_insert(e);
        }
    });
    let summary = match result {
        Ok(summary) => summary,
        Err(e @ (monitor::MonitorError::Model(_) | monitor::MonitorError::Mapping(_))) => {
            eprintln!("invalid: {e}");
            return FINDINGS;
        }
        Err(e) => return operational(e),
    };
    if let Some(e) = sink_error {
        return operational(format!("alert sink failed: {e}"));
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    if summary.clean() {
        OK
    } else {
        FINDINGS
    }
}

fn cmd_serve(bind: &str) -> u8 {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(runtime) => runtime,
        Err(e) => return operational(e),
    };
    match runtime.block_on(crate::service::run(bind)) {
        Ok(()) => OK,
        Err(e) => operational(e),
    }
}

fn cmd_scenario(paths: &[PathBuf]) -> u8 {
    let mut worst = OK;
    for path in paths {
        match run_scenario(path) {
            Ok(outcome) => {
                println!("ok: {} ({} step(s))", outcome.name, outcome.steps_run);
            }
            Err(e @ ScenarioError::Load(_)) => {
                eprintln!("error: {}: {e}", path.display());
                worst = TROUBLE.max(worst);
            }
            Err(e) => {
                println!("failed: {}: {e}", path.display());
                worst = FINDINGS.max(worst);
            }
        }
    }
    worst
}
