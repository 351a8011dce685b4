//! Recursive-descent parser for the expression concrete syntax.

use super::{BinaryOp, Expr, ExprError, UnaryOp, Value};
use crate::graph::EventId;
use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Text(String),
    Ident(String),
    EventRef(String),
    Symbol(&'static str),
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn err(&self, position: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax { position, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        self.src[start..self.pos].to_string()
    }

    /// Next token plus its starting offset; None at end of input.
    fn next(&mut self) -> Result<Option<(usize, Token)>, ExprError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        let b = self.bytes[self.pos];
        let token = match b {
            b'0'..=b'9' => {
                let mut end = self.pos;
                while end < self.bytes.len() && self.bytes[end].is_ascii_digit() {
                    end += 1;
                }
                let n = BigInt::parse_bytes(&self.bytes[self.pos..end], 10)
                    .ok_or_else(|| self.err(start, "bad integer literal"))?;
                self.pos = end;
                Token::Int(n)
            }
            b'"' => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    if self.pos >= self.bytes.len() {
                        return Err(self.err(start, "unterminated string literal"));
                    }
                    match self.bytes[self.pos] {
                        b'"' => {
                            self.pos += 1;
                            break;
                        }
                        b'\\' => {
                            self.pos += 1;
                            match self.bytes.get(self.pos) {
                                Some(b'"') => out.push('"'),
                                Some(b'\\') => out.push('\\'),
                                _ => return Err(self.err(self.pos, "bad escape, expected \\\" or \\\\")),
                            }
                            self.pos += 1;
                        }
                        _ => {
                            // take one full UTF-8 character
                            let rest = &self.src[self.pos..];
                            let ch = rest.chars().next().unwrap();
                            out.push(ch);
                            self.pos += ch.len_utf8();
                        }
                    }
                }
                Token::Text(out)
            }
            b'@' => {
                self.pos += 1;
                let name = self.ident();
                if name.is_empty() {
                    return Err(self.err(start, "expected event name after @"));
                }
                Token::EventRef(name)
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => Token::Ident(self.ident()),
            b'+' => { self.pos += 1; Token::Symbol("+") }
            b'-' => { self.pos += 1; Token::Symbol("-") }
            b'*' => { self.pos += 1; Token::Symbol("*") }
            b'/' => { self.pos += 1; Token::Symbol("/") }
            b'(' => { self.pos += 1; Token::Symbol("(") }
            b')' => { self.pos += 1; Token::Symbol(")") }
            b'=' => { self.pos += 1; Token::Symbol("=") }
            b'!' => {
                if self.bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::Symbol("!=")
                } else {
                    return Err(self.err(start, "expected != (use `not` for negation)"));
                }
            }
            b'<' => {
                if self.bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::Symbol("<=")
                } else {
                    self.pos += 1;
                    Token::Symbol("<")
                }
            }
            b'>' => {
                if self.bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Token::Symbol(">=")
                } else {
                    self.pos += 1;
                    Token::Symbol(">")
                }
            }
            other => {
                return Err(self.err(start, format!("unexpected character {:?}", other as char)));
            }
        };
        Ok(Some((start, token)))
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.cursor).cloned();
        self.cursor += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax { position: self.here(), message: message.into() }
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.peek() == Some(&Token::Symbol(match sym {
            "+" => "+", "-" => "-", "*" => "*", "/" => "/",
            "(" => "(", ")" => ")", "=" => "=", "!=" => "!=",
            "<" => "<", "<=" => "<=", ">" => ">", ">=" => ">=",
            _ => unreachable!(),
        })) {
            self.cursor += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if let Some(Token::Ident(name)) = self.peek() {
            if name == kw {
                self.cursor += 1;
                return true;
            }
        }
        false
    }

    fn or_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(BinaryOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.cmp_expr()?;
        while self.eat_keyword("and") {
            let rhs = self.cmp_expr()?;
            lhs = Expr::Binary(BinaryOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = if self.eat_symbol("=") {
                BinaryOp::Eq
            } else if self.eat_symbol("!=") {
                BinaryOp::Ne
            } else if self.eat_symbol("<=") {
                BinaryOp::Le
            } else if self.eat_symbol("<") {
                BinaryOp::Lt
            } else if self.eat_symbol(">=") {
                BinaryOp::Ge
            } else if self.eat_symbol(">") {
                BinaryOp::Gt
            } else {
                break;
            };
            let rhs = self.add_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = if self.eat_symbol("+") {
                BinaryOp::Add
            } else if self.eat_symbol("-") {
                BinaryOp::Sub
            } else {
                break;
            };
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = if self.eat_symbol("*") {
                BinaryOp::Mul
            } else if self.eat_symbol("/") {
                BinaryOp::Div
            } else {
                break;
            };
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, ExprError> {
        if self.eat_keyword("not") {
            let inner = self.unary_expr()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner)));
        }
        if self.eat_symbol("-") {
            let inner = self.unary_expr()?;
            return Ok(Expr::Unary(UnaryOp::Negate, Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let position = self.here();
        match self.bump() {
            Some((_, Token::Int(n))) => Ok(Expr::Literal(Value::Int(n))),
            Some((_, Token::Text(s))) => Ok(Expr::Literal(Value::Text(s))),
            Some((_, Token::EventRef(name))) => Ok(Expr::EventRef(EventId::new(name))),
            Some((_, Token::Ident(name))) => match name.as_str() {
                "true" => Ok(Expr::Literal(Value::Bool(true))),
                "false" => Ok(Expr::Literal(Value::Bool(false))),
                other => Err(ExprError::Syntax {
                    position,
                    message: format!("unexpected identifier {other:?} (event references are @{other})"),
                }),
            },
            Some((_, Token::Symbol("("))) => {
                let inner = self.or_expr()?;
                if !self.eat_symbol(")") {
                    return Err(self.err("expected )"));
                }
                Ok(inner)
            }
            Some((_, tok)) => Err(ExprError::Syntax {
                position,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(ExprError::Syntax {
                position,
                message: "unexpected end of expression".into(),
            }),
        }
    }
}

/// Parses the concrete expression syntax into an [`Expr`].
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next()? {
        tokens.push(tok);
    }
    let mut parser = Parser { tokens, cursor: 0, end: text.len() };
    let expr = parser.or_expr()?;
    if parser.cursor != parser.tokens.len() {
        return Err(parser.err("trailing input after expression"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn parses_event_comparison() {
        assert_eq!(
            p("@guess = @secret"),
            Expr::Binary(
                BinaryOp::Eq,
                Box::new(Expr::event_ref("guess")),
                Box::new(Expr::event_ref("secret")),
            )
        );
    }

    #[test]
    fn parses_literals() {
        assert_eq!(p("true"), Expr::truth());
        assert_eq!(p("false"), Expr::Literal(Value::Bool(false)));
        assert_eq!(p("42"), Expr::literal(42u64));
        assert_eq!(p("\"so \\\"quoted\\\"\""), Expr::Literal(Value::Text("so \"quoted\"".into())));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("2 + 3 * 4"), p("2 + (3 * 4)"));
        assert_eq!(p("2 * 3 + 4"), p("(2 * 3) + 4"));
        assert_eq!(p("1 - 2 - 3"), p("(1 - 2) - 3"));
        assert_eq!(p("@a > 0 and @a <= 100 or @b"), p("((@a > 0) and (@a <= 100)) or @b"));
        assert_eq!(p("not @a and @b"), p("(not @a) and @b"));
        assert_eq!(p("-2 + 3"), p("(-2) + 3"));
    }

    #[test]
    fn and_binds_conjuncts() {
        assert_eq!(
            p("@amount > 0 and @amount <= 100"),
            Expr::Binary(
                BinaryOp::And,
                Box::new(Expr::Binary(
                    BinaryOp::Gt,
                    Box::new(Expr::event_ref("amount")),
                    Box::new(Expr::literal(0u64)),
                )),
                Box::new(Expr::Binary(
                    BinaryOp::Le,
                    Box::new(Expr::event_ref("amount")),
                    Box::new(Expr::literal(100u64)),
                )),
            )
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_expr("1 + ") {
            Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse_expr("@").is_err());
        assert!(parse_expr("(1 + 2").is_err());
        assert!(parse_expr("1 2").is_err());
        assert!(parse_expr("guess = 1").is_err()); // bare identifier
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "@guess = @secret",
            "1 + 2 * 3",
            "(1 + 2) * 3",
            "not (@a and @b)",
            "1 - (2 - 3)",
            "-@x + 4",
            "\"a\" != \"b\"",
            "@amount > 0 and @amount <= 100",
        ] {
            let ast = p(src);
            assert_eq!(p(&ast.to_string()), ast, "round trip through {src:?}");
        }
    }
}
