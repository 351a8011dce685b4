//! Line-oriented interactive loop over a graph instance. Reads commands,
//! writes a transcript that is deterministic for a given command sequence
//! (map iteration order is sorted), so sessions can be replayed and diffed.

use crate::engine::{EngineError, Instance, TimeMode};
use crate::expr::{eval_expr, parse_duration, parse_expr};
use crate::graph::EventId;
use crate::marking::{Deadline, Marking};
use std::io::{BufRead, Write};

const HELP: &str = "\
commands:
  list                  enabled events, pending deadlines, accepting flag
  exec <event> [expr]   run an event; expr supplies the input value
  advance <ticks>       advance time permissively (number or duration like PT1H)
  marking               dump the full marking
  help                  this text
  quit                  leave";

/// Runs the command loop until `quit` or end of input. Each read line is
/// echoed with a `> ` prefix so the output alone is a full transcript.
/// `role` fixes the session role used for enabledness and execution.
pub fn run(
    instance: &mut Instance,
    role: Option<&str>,
    input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        writeln!(output, "> {line}")?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (command, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((head, tail)) => (head, tail.trim()),
            None => (trimmed, ""),
        };
        match command {
            "quit" | "exit" => return Ok(()),
            "help" => writeln!(output, "{HELP}")?,
            "list" => list(instance, role, &mut output)?,
            "marking" => dump_marking(instance.marking(), &mut output)?,
            "exec" => exec(instance, role, rest, &mut output)?,
            "advance" => advance(instance, rest, &mut output)?,
            other => writeln!(output, "unknown command {other:?}; try help")?,
        }
    }
    Ok(())
}

fn join_or_none(parts: Vec<String>) -> String {
    if parts.is_empty() {
        "(none)".into()
    } else {
        parts.join(", ")
    }
}

fn deadline_text(deadline: &Deadline) -> String {
    match deadline {
        Deadline::Finite(n) => format!("in {n}"),
        Deadline::Infinite => "infinite".into(),
    }
}

fn list(instance: &Instance, role: Option<&str>, output: &mut impl Write) -> std::io::Result<()> {
    match instance.enabled_events(role) {
        Ok(enabled) => {
            let names: Vec<String> = enabled.iter().map(|id| id.to_string()).collect();
            writeln!(output, "enabled: {}", join_or_none(names))?;
        }
        Err(e) => writeln!(output, "error: {e}")?,
    }
    let pending: Vec<String> = instance
        .marking()
        .pending
        .iter()
        .map(|(id, deadline)| format!("{id} ({})", deadline_text(deadline)))
        .collect();
    writeln!(output, "pending: {}", join_or_none(pending))?;
    writeln!(
        output,
        "accepting: {}",
        if instance.is_accepting() { "yes" } else { "no" }
    )
}

fn dump_marking(marking: &Marking, output: &mut impl Write) -> std::io::Result<()> {
    let executed: Vec<String> = marking
        .executed
        .iter()
        .map(|(id, age)| format!("{id}={age}"))
        .collect();
    let pending: Vec<String> = marking
        .pending
        .iter()
        .map(|(id, deadline)| format!("{id} ({})", deadline_text(deadline)))
        .collect();
    let included: Vec<String> = marking.included.iter().map(|id| id.to_string()).collect();
    let values: Vec<String> = marking
        .values
        .iter()
        .map(|(id, value)| format!("{id}={value}"))
        .collect();
    writeln!(output, "executed: {}", join_or_none(executed))?;
    writeln!(output, "pending: {}", join_or_none(pending))?;
    writeln!(output, "included: {}", join_or_none(included))?;
    writeln!(output, "values: {}", join_or_none(values))
}

fn exec(
    instance: &mut Instance,
    role: Option<&str>,
    rest: &str,
    output: &mut impl Write,
) -> std::io::Result<()> {
    if rest.is_empty() {
        return writeln!(output, "usage: exec <event> [expr]");
    }
    let (event, value_text) = match rest.split_once(char::is_whitespace) {
        Some((head, tail)) => (head, tail.trim()),
        None => (rest, ""),
    };
    let value = if value_text.is_empty() {
        None
    } else {
        let expr = match parse_expr(value_text) {
            Ok(expr) => expr,
            Err(e) => return writeln!(output, "error: {e}"),
        };
        match eval_expr(&expr, instance.marking()) {
            Ok(value) => Some(value),
            Err(e) => return writeln!(output, "error: {e}"),
        }
    };
    let event = EventId::from(event);
    match instance.execute(&event, role, value) {
        Ok(()) => writeln!(output, "executed {event}"),
        Err(EngineError::NotEnabled { verdict, .. }) => {
            let reasons: Vec<String> = verdict.blockers.iter().map(|b| b.to_string()).collect();
            writeln!(output, "refused: {}", reasons.join("; "))
        }
        Err(e) => writeln!(output, "error: {e}"),
    }
}

fn advance(instance: &mut Instance, rest: &str, output: &mut impl Write) -> std::io::Result<()> {
    if rest.is_empty() {
        return writeln!(output, "usage: advance <ticks>");
    }
    let ticks = match parse_duration(rest) {
        Ok(n) => n,
        Err(e) => return writeln!(output, "error: {e}"),
    };
    match instance.advance(ticks, TimeMode::Permissive) {
        Ok(overdue) => {
            writeln!(output, "advanced {ticks} tick(s)")?;
            for alert in overdue {
                writeln!(output, "overdue: {} missed by {}", alert.event, alert.missed_by)?;
            }
            Ok(())
        }
        Err(e) => writeln!(output, "error: {e}"),
    }
}
