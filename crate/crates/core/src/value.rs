//! Step values: what a working-memory fact holds and what a student enters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{self, check_equivalence, Expr, Format, ParseError, ParseErrorKind};

/// How a step's input box is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    Expression,
    Integer,
    IntegerPair,
    Equation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Expr(Expr),
    Tuple(Vec<Expr>),
    Equation(Expr, Expr),
    Text(String),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Expr(Expr::Int(n))
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            Value::Expr(e) => Some(e),
            _ => None,
        }
    }

    /// Integer content, after canonicalisation, of an expression value.
    pub fn as_int(&self) -> Option<i64> {
        self.as_expr().and_then(|e| expr::canonicalize(e).as_int())
    }

    pub fn render(&self, format: Format) -> String {
        match self {
            Value::Expr(e) => expr::render(e, format),
            Value::Tuple(items) => items
                .iter()
                .map(|e| expr::render(e, format))
                .collect::<Vec<_>>()
                .join(", "),
            Value::Equation(l, r) => {
                format!("{} = {}", expr::render(l, format), expr::render(r, format))
            }
            Value::Text(t) => t.clone(),
        }
    }

    pub fn to_plain(&self) -> String {
        self.render(Format::Plain)
    }

    /// Parse student input for a step with the given input mode.
    pub fn parse(mode: InputMode, input: &str) -> Result<Value, ParseError> {
        match mode {
            InputMode::Expression => Ok(Value::Expr(expr::parse(input)?)),
            InputMode::Integer => {
                let e = expr::parse(input)?;
                if let Some(v) = e.free_vars().into_iter().next() {
                    let at = input.chars().position(|c| c == v).unwrap_or(0);
                    return Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::UnexpectedToken,
                        message: "expected a number".into(),
                    });
                }
                Ok(Value::Expr(e))
            }
            InputMode::IntegerPair => {
                let parts = split_top_level(strip_outer_parens(input), ',');
                if parts.len() != 2 {
                    return Err(ParseError {
                        position: input.chars().count(),
                        kind: ParseErrorKind::UnexpectedToken,
                        message: "expected two numbers separated by a comma".into(),
                    });
                }
                let mut items = Vec::with_capacity(2);
                for (offset, part) in parts {
                    let offset = offset + outer_paren_offset(input);
                    let e = expr::parse(part).map_err(|e| e.offset_by(offset))?;
                    items.push(e);
                }
                Ok(Value::Tuple(items))
            }
            InputMode::Equation => {
                let parts = split_top_level(input, '=');
                if parts.len() != 2 {
                    return Err(ParseError {
                        position: input.chars().count(),
                        kind: ParseErrorKind::UnexpectedToken,
                        message: "expected an equation with exactly one `=`".into(),
                    });
                }
                let (lo, l) = parts[0];
                let (ro, r) = parts[1];
                let lhs = expr::parse(l).map_err(|e| e.offset_by(lo))?;
                let rhs = expr::parse(r).map_err(|e| e.offset_by(ro))?;
                Ok(Value::Equation(lhs, rhs))
            }
        }
    }

    /// Two-tier equivalence lifted to step values. Equations match when their
    /// `lhs - rhs` differences agree up to sign, so swapped sides are accepted.
    pub fn equivalent(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Expr(a), Value::Expr(b)) => check_equivalence(a, b).holds(),
            (Value::Tuple(a), Value::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| check_equivalence(x, y).holds())
            }
            (Value::Equation(l1, r1), Value::Equation(l2, r2)) => {
                let d1 = Expr::sum([l1.clone(), Expr::neg(r1.clone())]);
                let d2 = Expr::sum([l2.clone(), Expr::neg(r2.clone())]);
                let flipped = Expr::neg(d2.clone());
                check_equivalence(&d1, &d2).holds() || check_equivalence(&d1, &flipped).holds()
            }
            (Value::Text(a), Value::Text(b)) => a.trim() == b.trim(),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_plain())
    }
}

fn outer_paren_offset(input: &str) -> usize {
    if strip_outer_parens(input).len() != input.len() {
        input.chars().take_while(|c| *c != '(').count() + 1
    } else {
        0
    }
}

/// `(a, b)` -> `a, b` when the parentheses enclose the whole input.
fn strip_outer_parens(input: &str) -> &str {
    let t = input.trim();
    if !(t.starts_with('(') && t.ends_with(')')) {
        return input;
    }
    let mut depth = 0i32;
    for (i, c) in t.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i != t.len() - 1 {
                    return input;
                }
            }
            _ => {}
        }
    }
    &t[1..t.len() - 1]
}

/// Split on `sep` outside parentheses, returning each piece with its
/// character offset in `input`.
fn split_top_level(input: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start_byte = 0;
    let mut start_char = 0;
    for (ci, (bi, c)) in input.char_indices().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ if c == sep && depth == 0 => {
                out.push((start_char, &input[start_byte..bi]));
                start_byte = bi + c.len_utf8();
                start_char = ci + 1;
            }
            _ => {}
        }
    }
    out.push((start_char, &input[start_byte..]));
    out
}
