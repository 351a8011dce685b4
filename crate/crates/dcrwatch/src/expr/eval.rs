//! Expression evaluation against a marking.

use super::{BinaryOp, Expr, ExprError, UnaryOp, Value};
use crate::graph::EventId;
use crate::marking::Marking;
use num_bigint::BigInt;

/// Evaluates an expression against a marking. Event references read the
/// referenced event's current value; an unset value is an error here (guards
/// absorb it, see [`eval_guard`]). Division truncates toward zero. `and` and
/// `or` short-circuit, so an unset reference in an unreached operand is not
/// touched.
pub fn eval_expr(expr: &Expr, marking: &Marking) -> Result<Value, ExprError> {
    match expr {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::EventRef(id) => marking
            .values
            .get(id)
            .cloned()
            .ok_or_else(|| ExprError::UndefinedValue(id.clone())),
        Expr::Unary(op, inner) => {
            let v = eval_expr(inner, marking)?;
            match (op, v) {
                (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnaryOp::Negate, Value::Int(n)) => Ok(Value::Int(-n)),
                (op, v) => Err(ExprError::TypeMismatch(format!(
                    "{op:?} is not defined on {}",
                    v.type_name()
                ))),
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            // Short-circuit before touching the right operand.
            if matches!(op, BinaryOp::And | BinaryOp::Or) {
                let l = expect_bool(eval_expr(lhs, marking)?, "left operand")?;
                return match (op, l) {
                    (BinaryOp::And, false) => Ok(Value::Bool(false)),
                    (BinaryOp::Or, true) => Ok(Value::Bool(true)),
                    _ => {
                        let r = expect_bool(eval_expr(rhs, marking)?, "right operand")?;
                        Ok(Value::Bool(r))
                    }
                };
            }
            let l = eval_expr(lhs, marking)?;
            let r = eval_expr(rhs, marking)?;
            apply_binary(*op, l, r)
        }
    }
}

fn expect_bool(v: Value, what: &str) -> Result<bool, ExprError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(ExprError::TypeMismatch(format!(
            "{what} must be bool, got {}",
            other.type_name()
        ))),
    }
}

fn apply_binary(op: BinaryOp, l: Value, r: Value) -> Result<Value, ExprError> {
    use BinaryOp::*;
    match op {
        Add | Sub | Mul | Div => {
            let (a, b) = int_pair(op, l, r)?;
            match op {
                Add => Ok(Value::Int(a + b)),
                Sub => Ok(Value::Int(a - b)),
                Mul => Ok(Value::Int(a * b)),
                Div => {
                    if b == BigInt::from(0) {
                        Err(ExprError::DivisionByZero)
                    } else {
                        // BigInt division truncates toward zero, like the host language.
                        Ok(Value::Int(a / b))
                    }
                }
                _ => unreachable!(),
            }
        }
        Eq => Ok(Value::Bool(same_type(op, &l, &r).map(|_| l == r)?)),
        Ne => Ok(Value::Bool(same_type(op, &l, &r).map(|_| l != r)?)),
        Lt | Le | Gt | Ge => {
            let (a, b) = int_pair(op, l, r)?;
            Ok(Value::Bool(match op {
                Lt => a < b,
                Le => a <= b,
                Gt => a > b,
                Ge => a >= b,
                _ => unreachable!(),
            }))
        }
        And | Or => unreachable!("short-circuited in eval_expr"),
    }
}

fn int_pair(op: BinaryOp, l: Value, r: Value) -> Result<(BigInt, BigInt), ExprError> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Ok((a, b)),
        (l, r) => Err(ExprError::TypeMismatch(format!(
            "{op:?} needs int operands, got {} and {}",
            l.type_name(),
            r.type_name()
        ))),
    }
}

fn same_type(op: BinaryOp, l: &Value, r: &Value) -> Result<(), ExprError> {
    if std::mem::discriminant(l) == std::mem::discriminant(r) {
        Ok(())
    } else {
        Err(ExprError::TypeMismatch(format!(
            "{op:?} compares values of one type, got {} and {}",
            l.type_name(),
            r.type_name()
        )))
    }
}

/// A guard verdict: whether the guard holds, and whether an unset event
/// value forced it to `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardEval {
    pub holds: bool,
    /// Set when the guard referenced an event with no value yet; such a
    /// guard does not fire, and this records why.
    pub undefined: Option<EventId>,
}

impl GuardEval {
    fn holds(b: bool) -> GuardEval {
        GuardEval { holds: b, undefined: None }
    }
}

/// Evaluates a relation guard. The result must be boolean. A reference to an
/// event with no value absorbs to `false` (a guard over missing data does
/// not fire), reported in [`GuardEval::undefined`] rather than as an error.
pub fn eval_guard(expr: &Expr, marking: &Marking) -> Result<GuardEval, ExprError> {
    match eval_expr(expr, marking) {
        Ok(Value::Bool(b)) => Ok(GuardEval::holds(b)),
        Ok(other) => Err(ExprError::TypeMismatch(format!(
            "guard must evaluate to bool, got {}",
            other.type_name()
        ))),
        Err(ExprError::UndefinedValue(id)) => Ok(GuardEval { holds: false, undefined: Some(id) }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn marking_with(values: &[(&str, Value)]) -> Marking {
        let mut m = Marking::default();
        for (name, v) in values {
            m.values.insert(EventId::new(*name), v.clone());
        }
        m
    }

    fn eval(src: &str, m: &Marking) -> Result<Value, ExprError> {
        eval_expr(&parse_expr(src).unwrap(), m)
    }

    #[test]
    fn arithmetic_and_precedence() {
        let m = Marking::default();
        assert_eq!(eval("2 + 3 * 4", &m).unwrap(), Value::from(14u64));
        assert_eq!(eval("7 / 2", &m).unwrap(), Value::from(3u64));
        assert_eq!(eval("-7 / 2", &m).unwrap(), Value::from(-3i64)); // truncation toward zero
        assert_eq!(eval("1 - 2 - 3", &m).unwrap(), Value::from(-4i64));
    }

    #[test]
    fn event_refs_read_values() {
        let m = marking_with(&[("a", Value::from(7u64)), ("b", Value::from(7u64))]);
        assert_eq!(eval("@a = @b", &m).unwrap(), Value::Bool(true));
        assert_eq!(eval("@a + @b", &m).unwrap(), Value::from(14u64));
        assert_eq!(
            eval("@missing", &m),
            Err(ExprError::UndefinedValue(EventId::new("missing")))
        );
    }

    #[test]
    fn comparison_requires_matching_types() {
        let m = marking_with(&[("t", Value::Text("x".into()))]);
        assert!(matches!(eval("@t = 1", &m), Err(ExprError::TypeMismatch(_))));
        assert_eq!(eval("@t = \"x\"", &m).unwrap(), Value::Bool(true));
        assert_eq!(eval("@t != \"y\"", &m).unwrap(), Value::Bool(true));
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(eval("1 / 0", &Marking::default()), Err(ExprError::DivisionByZero));
    }

    #[test]
    fn short_circuit_skips_unset_refs() {
        let m = Marking::default();
        assert_eq!(eval("true or @missing = 1", &m).unwrap(), Value::Bool(true));
        assert_eq!(eval("false and @missing = 1", &m).unwrap(), Value::Bool(false));
    }

    #[test]
    fn guard_absorbs_undefined_to_false() {
        let m = Marking::default();
        let g = eval_guard(&parse_expr("@released = true").unwrap(), &m).unwrap();
        assert!(!g.holds);
        assert_eq!(g.undefined, Some(EventId::new("released")));

        let m = marking_with(&[("amount", Value::from(5u64))]);
        let g = eval_guard(&parse_expr("@amount > 0").unwrap(), &m).unwrap();
        assert!(g.holds);
        assert_eq!(g.undefined, None);
    }

    #[test]
    fn guard_requires_bool() {
        let err = eval_guard(&parse_expr("1 + 1").unwrap(), &Marking::default());
        assert!(matches!(err, Err(ExprError::TypeMismatch(_))));
    }
}
