//! Algebraic expressions: the common currency for problem statements,
//! expected step values and student input.
//!
//! Expressions are parsed from a small plain-text grammar, normalised by
//! [`canonicalize`], compared with [`equivalent`] and rendered back to
//! plain text or LaTeX.

mod canon;
mod equiv;
mod eval;
mod parse;
mod render;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use canon::{canonicalize, linear_coefficients};
pub use equiv::{check_equivalence, equivalent, Equivalence, SAMPLE_POINTS};
pub use eval::{evaluate, EvalError, SINGULARITY_THRESHOLD};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use render::{render, Format};

/// Exact rational constant used during constant folding.
pub type Rational = Ratio<i64>;

/// An algebraic expression tree.
///
/// Integer constants are the only numeric leaves. Division is kept as an
/// explicit [`Expr::Frac`] node until canonicalisation rewrites it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Var(char),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Frac(Box<Expr>, Box<Expr>),
    /// Radicand and root index (always at least 2).
    Radical(Box<Expr>, u32),
}

/// Rejected attempt to build an expression that breaks a structural invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidExpr {
    #[error("fraction denominator is the literal constant 0")]
    ZeroDenominator,
    #[error("radical index must be at least 2, got {0}")]
    RadicalIndex(u32),
}

impl Expr {
    pub fn int(n: i64) -> Self {
        Expr::Int(n)
    }

    pub fn var(name: char) -> Self {
        Expr::Var(name)
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Sum(terms.into_iter().collect())
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Product(factors.into_iter().collect())
    }

    pub fn pow(base: Expr, exponent: Expr) -> Self {
        Expr::Pow(Box::new(base), Box::new(exponent))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(inner: Expr) -> Self {
        Expr::Neg(Box::new(inner))
    }

    pub fn frac(numerator: Expr, denominator: Expr) -> Result<Self, InvalidExpr> {
        if denominator == Expr::Int(0) {
            return Err(InvalidExpr::ZeroDenominator);
        }
        Ok(Expr::Frac(Box::new(numerator), Box::new(denominator)))
    }

    pub fn radical(radicand: Expr, index: u32) -> Result<Self, InvalidExpr> {
        if index < 2 {
            return Err(InvalidExpr::RadicalIndex(index));
        }
        Ok(Expr::Radical(Box::new(radicand), index))
    }

    pub fn sqrt(radicand: Expr) -> Self {
        Expr::Radical(Box::new(radicand), 2)
    }

    /// Exact rational constant, either an integer or a fraction of two integers.
    pub fn rational(q: Rational) -> Self {
        if *q.denom() == 1 {
            Expr::Int(*q.numer())
        } else {
            Expr::Frac(Box::new(Expr::Int(*q.numer())), Box::new(Expr::Int(*q.denom())))
        }
    }

    /// The value of this node if it is a literal integer or a fraction of two
    /// literal integers.
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Expr::Int(n) => Some(Rational::from_integer(*n)),
            Expr::Frac(n, d) => match (n.as_ref(), d.as_ref()) {
                (Expr::Int(n), Expr::Int(d)) if *d != 0 && *n != i64::MIN && *d != i64::MIN => {
                    Some(Rational::new(*n, *d))
                }
                _ => None,
            },
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Expr::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Var(_) => Vec::new(),
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().collect(),
            Expr::Pow(a, b) | Expr::Frac(a, b) => vec![a, b],
            Expr::Neg(a) | Expr::Radical(a, _) => vec![a],
        }
    }

    /// Variables occurring anywhere in the tree, in alphabetical order.
    pub fn free_vars(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<char>) {
        if let Expr::Var(v) = self {
            out.insert(*v);
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Plain-text rendering; parses back to a canonically equal tree.
    pub fn to_plain(&self) -> String {
        render(self, Format::Plain)
    }

    pub fn to_latex(&self) -> String {
        render(self, Format::Latex)
    }

    fn class_rank(&self) -> u8 {
        match self {
            _ if self.as_rational().is_some() => 0,
            Expr::Var(_) => 1,
            _ => 2,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Expr::Int(_) => 0,
            Expr::Frac(..) => 1,
            Expr::Var(_) => 2,
            Expr::Sum(_) => 3,
            Expr::Product(_) => 4,
            Expr::Pow(..) => 5,
            Expr::Radical(..) => 6,
            Expr::Neg(_) => 7,
        }
    }
}

/// Total order used to sort commutative operands: constants by value, then
/// variables alphabetically, then composite nodes by kind and children.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_class = self.class_rank().cmp(&other.class_rank());
        if by_class != Ordering::Equal {
            return by_class;
        }
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            let by_value = a.cmp(&b);
            if by_value != Ordering::Equal {
                return by_value;
            }
        }
        let by_tag = self.tag().cmp(&other.tag());
        if by_tag != Ordering::Equal {
            return by_tag;
        }
        match (self, other) {
            (Expr::Int(a), Expr::Int(b)) => a.cmp(b),
            (Expr::Var(a), Expr::Var(b)) => a.cmp(b),
            (Expr::Radical(a, i), Expr::Radical(b, j)) => i.cmp(j).then_with(|| a.cmp(b)),
            _ => {
                let (xs, ys) = (self.children(), other.children());
                for (x, y) in xs.iter().zip(ys.iter()) {
                    let c = x.cmp(y);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                xs.len().cmp(&ys.len())
            }
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_plain())
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// The plain-text syntax is the wire format, so expressions serialise as strings.
impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_plain())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_constructors_enforce_invariants() {
        assert_eq!(
            Expr::frac(Expr::int(1), Expr::int(0)),
            Err(InvalidExpr::ZeroDenominator)
        );
        assert_eq!(Expr::radical(Expr::int(8), 1), Err(InvalidExpr::RadicalIndex(1)));
        assert!(Expr::radical(Expr::int(8), 3).is_ok());
    }

    #[test]
    fn ordering_puts_constants_before_variables_before_composites() {
        let mut xs = vec![
            Expr::pow(Expr::var('x'), Expr::int(2)),
            Expr::var('y'),
            Expr::int(3),
            Expr::var('x'),
            Expr::rational(Rational::new(1, 2)),
        ];
        xs.sort();
        assert_eq!(
            xs,
            vec![
                Expr::rational(Rational::new(1, 2)),
                Expr::int(3),
                Expr::var('x'),
                Expr::var('y'),
                Expr::pow(Expr::var('x'), Expr::int(2)),
            ]
        );
    }

    #[test]
    fn serde_uses_plain_text() {
        let e = parse("x^7").unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "\"x^7\"");
        let back: Expr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
