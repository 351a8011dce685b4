//! Guard and computation expressions: runtime values, the expression AST,
//! a parser for the concrete syntax, an evaluator over markings, and
//! ISO-8601 duration parsing for time annotations.
//!
//! Concrete syntax, loosest first: `or` < `and` < comparisons (`=`, `!=`,
//! `<`, `<=`, `>`, `>=`, left-associative) < `+`/`-` < `*`/`/` < unary
//! (`not`, `-`). Event references are written `@name` and read the event's
//! current value from the marking. Literals are non-negative integers,
//! `true`/`false`, and double-quoted strings.

mod duration;
mod eval;
mod parser;

pub use duration::parse_duration;
pub use eval::{eval_expr, eval_guard, GuardEval};
pub use parser::parse_expr;

use crate::graph::EventId;
use num_bigint::BigInt;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A runtime value: arbitrary-precision integer, boolean, or text.
///
/// Integers cover the full Ethereum word range (and beyond), so decoded
/// `uint256` parameters are always representable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Text(_) => "text",
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::Int(BigInt::from(n))
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }
}

impl From<BigInt> for Value {
    fn from(n: BigInt) -> Self {
        Value::Int(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => write!(f, "{s:?}"),
        }
    }
}

/// JSON form: booleans and strings map directly; integers map to JSON
/// numbers when they fit in `i64`/`u64`, otherwise to `{"int": "<decimal>"}`.
/// The envelope also accepts `0x`-prefixed hex. Floats are rejected: JSON
/// numbers outside the 64-bit range lose precision silently, so big values
/// must use the envelope form.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => ser.serialize_bool(*b),
            Value::Text(s) => ser.serialize_str(s),
            Value::Int(n) => {
                if let Ok(i) = i64::try_from(n.clone()) {
                    ser.serialize_i64(i)
                } else if let Ok(u) = u64::try_from(n.clone()) {
                    ser.serialize_u64(u)
                } else {
                    use serde::ser::SerializeMap;
                    let mut map = ser.serialize_map(Some(1))?;
                    map.serialize_entry("int", &n.to_string())?;
                    map.end()
                }
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Value;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a bool, integer, string, or {\"int\": \"<decimal>\"}")
            }

            fn visit_bool<E: de::Error>(self, b: bool) -> Result<Value, E> {
                Ok(Value::Bool(b))
            }

            fn visit_i64<E: de::Error>(self, n: i64) -> Result<Value, E> {
                Ok(Value::Int(BigInt::from(n)))
            }

            fn visit_u64<E: de::Error>(self, n: u64) -> Result<Value, E> {
                Ok(Value::Int(BigInt::from(n)))
            }

            fn visit_f64<E: de::Error>(self, _: f64) -> Result<Value, E> {
                Err(E::custom(
                    "values must be integers; use {\"int\": \"<decimal>\"} beyond 64 bits",
                ))
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<Value, E> {
                Ok(Value::Text(s.to_string()))
            }

            fn visit_map<A: de::MapAccess<'de>>(self, mut map: A) -> Result<Value, A::Error> {
                let key: String = map
                    .next_key()?
                    .ok_or_else(|| de::Error::custom("expected {\"int\": ...}"))?;
                if key != "int" {
                    return Err(de::Error::custom(format!(
                        "unknown value envelope key {key:?}, expected \"int\""
                    )));
                }
                let text: String = map.next_value()?;
                if map.next_key::<String>()?.is_some() {
                    return Err(de::Error::custom("value envelope must have a single key"));
                }
                parse_bigint(&text)
                    .map(Value::Int)
                    .ok_or_else(|| de::Error::custom(format!("bad integer literal {text:?}")))
            }
        }
        de.deserialize_any(V)
    }
}

/// Parses a decimal or `0x`-prefixed hex integer, with optional leading `-`.
pub(crate) fn parse_bigint(text: &str) -> Option<BigInt> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let magnitude = if let Some(hexits) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        BigInt::parse_bytes(hexits.as_bytes(), 16)?
    } else {
        BigInt::parse_bytes(body.as_bytes(), 10)?
    };
    Some(if neg { -magnitude } else { magnitude })
}

/// Expression AST for guards and event computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Literal(Value),
    /// `@name`: the referenced event's current value.
    EventRef(EventId),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Negate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    /// Binding strength; larger binds tighter.
    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div => 5,
        }
    }
}

const UNARY_PRECEDENCE: u8 = 6;

impl Expr {
    pub fn literal(v: impl Into<Value>) -> Expr {
        Expr::Literal(v.into())
    }

    pub fn event_ref(id: impl Into<EventId>) -> Expr {
        Expr::EventRef(id.into())
    }

    /// The literal `true`, the default guard.
    pub fn truth() -> Expr {
        Expr::Literal(Value::Bool(true))
    }

    pub fn is_truth(&self) -> bool {
        matches!(self, Expr::Literal(Value::Bool(true)))
    }

    /// Every event referenced anywhere in the expression.
    pub fn referenced_events(&self) -> Vec<&EventId> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a EventId>) {
        match self {
            Expr::Literal(_) => {}
            Expr::EventRef(id) => out.push(id),
            Expr::Unary(_, inner) => inner.collect_refs(out),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_refs(out);
                rhs.collect_refs(out);
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::EventRef(id) => write!(f, "@{id}"),
            Expr::Unary(op, inner) => {
                if min > UNARY_PRECEDENCE {
                    f.write_str("(")?;
                }
                match op {
                    UnaryOp::Not => f.write_str("not ")?,
                    UnaryOp::Negate => f.write_str("-")?,
                }
                inner.fmt_prec(f, UNARY_PRECEDENCE)?;
                if min > UNARY_PRECEDENCE {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Binary(op, lhs, rhs) => {
                let prec = op.precedence();
                if min > prec {
                    f.write_str("(")?;
                }
                // Left-associative: the right child needs parens at equal precedence.
                lhs.fmt_prec(f, prec)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_prec(f, prec + 1)?;
                if min > prec {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// Prints the expression in concrete syntax; `parse_expr` returns the same
/// AST back, provided integer literals are non-negative (negative literals
/// print as a unary minus).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Errors from expression parsing and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("event {0} has no value")]
    UndefinedValue(EventId),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
}
