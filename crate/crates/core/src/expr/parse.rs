use std::fmt;

use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    UnexpectedToken,
    UnbalancedDelimiter,
    EmptyInput,
    UnknownSymbol,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::UnexpectedToken => "unexpected token",
            ParseErrorKind::UnbalancedDelimiter => "unbalanced delimiter",
            ParseErrorKind::EmptyInput => "empty input",
            ParseErrorKind::UnknownSymbol => "unknown symbol",
        })
    }
}

/// Rejection of a plain-text expression. `position` is a character offset
/// in `0..=input.chars().count()`.
#[derive(Debug, Clone, PartialEq, Eq, Error, serde::Serialize, serde::Deserialize)]
#[error("{kind} at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        ParseError {
            position,
            kind,
            message: message.into(),
        }
    }

    /// Shift the position, used when the expression was cut out of a larger
    /// input such as one side of an equation.
    pub fn offset_by(mut self, delta: usize) -> Self {
        self.position += delta;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Var(char),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    RootSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sqrt,
    Cbrt,
    Root,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(input: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse::<i64>().map_err(|_| {
                ParseError::new(start, ParseErrorKind::UnexpectedToken, "integer literal is too large")
            })?;
            out.push(Token { tok: Tok::Int(n), pos: start });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let func = match word.as_str() {
                "sqrt" => Some(Func::Sqrt),
                "cbrt" => Some(Func::Cbrt),
                "root" => Some(Func::Root),
                _ => None,
            };
            if let Some(func) = func {
                out.push(Token { tok: Tok::Func(func), pos: start });
                continue;
            }
            let next_non_space = chars[i..].iter().find(|c| !c.is_whitespace());
            if word.len() > 1 && next_non_space == Some(&'(') {
                return Err(ParseError::new(
                    start,
                    ParseErrorKind::UnknownSymbol,
                    format!("unknown function `{word}`"),
                ));
            }
            // A run of letters is a product of single-letter variables.
            for (k, v) in word.chars().enumerate() {
                out.push(Token { tok: Tok::Var(v), pos: start + k });
            }
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' | '\u{00b7}' | '\u{00d7}' => Tok::Star,
            '/' | '\u{00f7}' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '\u{221a}' => Tok::RootSign,
            other => {
                return Err(ParseError::new(
                    pos,
                    ParseErrorKind::UnknownSymbol,
                    format!("unknown symbol `{other}`"),
                ))
            }
        };
        out.push(Token { tok, pos });
        i += 1;
    }
    Ok(out)
}

fn check_balance(tokens: &[Token], end: usize) -> Result<(), ParseError> {
    let mut depth = 0usize;
    for t in tokens {
        match t.tok {
            Tok::LParen => depth += 1,
            Tok::RParen => {
                if depth == 0 {
                    return Err(ParseError::new(
                        t.pos,
                        ParseErrorKind::UnbalancedDelimiter,
                        "`)` without matching `(`",
                    ));
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    if depth > 0 {
        return Err(ParseError::new(
            end,
            ParseErrorKind::UnbalancedDelimiter,
            "missing `)`",
        ));
    }
    Ok(())
}

/// Parse a plain-text expression.
///
/// Supports integers, single-letter variables, `+ - * / ^` (with `^`
/// right-associative and binding tighter than unary minus), implicit
/// multiplication such as `2x`, `3(x+1)` or `5sqrt(2)`, and the root forms
/// `sqrt(e)`, `cbrt(e)`, `root(e, k)` and `√e`. Juxtaposition binds tighter
/// than explicit `*` and `/`, so `1/2x` is `1/(2x)`.
pub fn parse(input: &str) -> Result<Expr, ParseError> {
    let end = input.chars().count();
    let tokens = lex(input)?;
    if tokens.is_empty() {
        return Err(ParseError::new(0, ParseErrorKind::EmptyInput, "no expression given"));
    }
    check_balance(&tokens, end)?;
    let mut p = Parser { tokens, idx: 0, end };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::new(
            t.pos,
            ParseErrorKind::UnexpectedToken,
            format!("unexpected {}", describe(&t.tok)),
        ));
    }
    Ok(e)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("number `{n}`"),
        Tok::Var(v) => format!("variable `{v}`"),
        Tok::Func(_) => "function name".to_string(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::RootSign => "`√`".into(),
    }
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.peek().map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn error_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(
                t.pos,
                ParseErrorKind::UnexpectedToken,
                format!("expected {expected}, found {}", describe(&t.tok)),
            ),
            None => ParseError::new(
                self.end,
                ParseErrorKind::UnexpectedToken,
                format!("expected {expected}, found end of input"),
            ),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek_tok() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(self.error_here(what))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek_tok() {
                Some(Tok::Plus) => {
                    self.idx += 1;
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.idx += 1;
                    terms.push(Expr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        let mut factors: Vec<Expr> = Vec::new();
        loop {
            match self.peek_tok() {
                Some(Tok::Star) => {
                    self.idx += 1;
                    factors.push(std::mem::replace(&mut acc, Expr::Int(0)));
                    acc = self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.idx += 1;
                    let pos = self.peek().map(|t| t.pos).unwrap_or(self.end);
                    let den = self.unary()?;
                    if den == Expr::Int(0) {
                        return Err(ParseError::new(
                            pos,
                            ParseErrorKind::UnexpectedToken,
                            "division by the literal 0",
                        ));
                    }
                    factors.push(std::mem::replace(&mut acc, Expr::Int(0)));
                    let num = if factors.len() == 1 {
                        factors.pop().unwrap()
                    } else {
                        Expr::Product(std::mem::take(&mut factors))
                    };
                    acc = Expr::Frac(Box::new(num), Box::new(den));
                }
                _ => break,
            }
        }
        if factors.is_empty() {
            Ok(acc)
        } else {
            factors.push(acc);
            Ok(Expr::Product(factors))
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_tok() {
            Some(Tok::Minus) => {
                self.idx += 1;
                Ok(Expr::neg(self.unary()?))
            }
            Some(Tok::Plus) => {
                self.idx += 1;
                self.unary()
            }
            _ => self.implicit(),
        }
    }

    fn starts_primary(&self) -> bool {
        matches!(
            self.peek_tok(),
            Some(Tok::Int(_) | Tok::Var(_) | Tok::Func(_) | Tok::LParen | Tok::RootSign)
        )
    }

    fn implicit(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.power()?];
        while self.starts_primary() {
            factors.push(self.power()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek_tok() == Some(&Tok::Caret) {
            self.idx += 1;
            let exponent = self.exponent()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        match self.peek_tok() {
            Some(Tok::Minus) => {
                self.idx += 1;
                Ok(Expr::neg(self.exponent()?))
            }
            Some(Tok::Plus) => {
                self.idx += 1;
                self.exponent()
            }
            _ => self.power(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_here("an operand"));
        };
        match tok.tok {
            Tok::Int(n) => {
                self.idx += 1;
                Ok(Expr::Int(n))
            }
            Tok::Var(v) => {
                self.idx += 1;
                Ok(Expr::Var(v))
            }
            Tok::LParen => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::RootSign => {
                self.idx += 1;
                let radicand = self.primary()?;
                Ok(Expr::Radical(Box::new(radicand), 2))
            }
            Tok::Func(func) => {
                self.idx += 1;
                self.expect(Tok::LParen, "`(` after function name")?;
                let radicand = self.expr()?;
                let index = match func {
                    Func::Sqrt => 2,
                    Func::Cbrt => 3,
                    Func::Root => {
                        self.expect(Tok::Comma, "`,` and a root index")?;
                        let at = self.peek().map(|t| t.pos).unwrap_or(self.end);
                        match self.bump().map(|t| t.tok) {
                            Some(Tok::Int(k)) if (2..=u32::MAX as i64).contains(&k) => k as u32,
                            _ => {
                                return Err(ParseError::new(
                                    at,
                                    ParseErrorKind::UnexpectedToken,
                                    "root index must be an integer of at least 2",
                                ))
                            }
                        }
                    }
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Radical(Box::new(radicand), index))
            }
            _ => Err(self.error_here("an operand")),
        }
    }
}
