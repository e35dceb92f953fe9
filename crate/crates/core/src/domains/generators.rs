use std::collections::BTreeMap;

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::expr::Expr;
use crate::production::Fact;
use crate::value::Value;

/// One generator parameter as written in a problem-type file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    /// Inclusive integer range, minus `exclude`.
    Range {
        min: i64,
        max: i64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        exclude: Vec<i64>,
    },
    Scalar(i64),
    Ints(Vec<i64>),
    Vars(Vec<char>),
}

pub type Params = BTreeMap<String, ParamSpec>;

pub(super) struct Generated {
    pub statement: Value,
    pub facts: Vec<Fact>,
}

type GeneratorFn = fn(&Params, &mut ChaCha8Rng) -> Result<Generated, DomainError>;

const GENERATORS: &[(&str, GeneratorFn)] = &[
    ("exponent-power", exponent_power),
    ("exponent-product", exponent_product),
    ("exponent-quotient", exponent_quotient),
    ("factor-quadratic", factor_quadratic),
    ("radical-simplify", radical_simplify),
    ("rational-equation", rational_equation),
];

pub fn generator_names() -> impl Iterator<Item = &'static str> {
    GENERATORS.iter().map(|(n, _)| *n)
}

pub(super) fn run(name: &str, params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let (_, f) = GENERATORS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| DomainError::Generator(format!("unknown generator `{name}`")))?;
    f(params, rng)
}

fn missing(name: &str) -> DomainError {
    DomainError::Generator(format!("parameter `{name}` is missing or has the wrong shape"))
}

fn ints(params: &Params, name: &str) -> Result<Vec<i64>, DomainError> {
    let values: Vec<i64> = match params.get(name) {
        Some(ParamSpec::Range { min, max, exclude }) => {
            (*min..=*max).filter(|v| !exclude.contains(v)).collect()
        }
        Some(ParamSpec::Ints(v)) => v.clone(),
        Some(ParamSpec::Scalar(v)) => vec![*v],
        _ => return Err(missing(name)),
    };
    if values.is_empty() {
        return Err(DomainError::Generator(format!("parameter `{name}` allows no values")));
    }
    Ok(values)
}

fn scalar(params: &Params, name: &str) -> Result<i64, DomainError> {
    match params.get(name) {
        Some(ParamSpec::Scalar(v)) => Ok(*v),
        _ => Err(missing(name)),
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, values: &[T]) -> T {
    *values.choose(rng).expect("non-empty")
}

fn pick_var(params: &Params, rng: &mut ChaCha8Rng) -> Result<char, DomainError> {
    match params.get("var") {
        Some(ParamSpec::Vars(v)) if !v.is_empty() => Ok(pick(rng, v)),
        _ => Err(missing("var")),
    }
}

fn exponent_facts(v: char, a: i64, b: i64) -> Vec<Fact> {
    vec![
        Fact::new("problem.var", Value::Expr(Expr::var(v))),
        Fact::new("problem.exp1", Value::int(a)),
        Fact::new("problem.exp2", Value::int(b)),
    ]
}

fn power(v: char, n: i64) -> Expr {
    Expr::pow(Expr::var(v), Expr::int(n))
}

fn exponent_product(params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let v = pick_var(params, rng)?;
    let a = pick(rng, &ints(params, "a")?);
    let b = pick(rng, &ints(params, "b")?);
    Ok(Generated {
        statement: Value::Expr(Expr::product([power(v, a), power(v, b)])),
        facts: exponent_facts(v, a, b),
    })
}

/// Draws `a` among values that leave some `b < a`, then `b` below it.
fn exponent_quotient(params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let v = pick_var(params, rng)?;
    let bs = ints(params, "b")?;
    let lowest_b = *bs.iter().min().expect("non-empty");
    let as_: Vec<i64> = ints(params, "a")?.into_iter().filter(|a| *a > lowest_b).collect();
    if as_.is_empty() {
        return Err(DomainError::Generator("no exponent pair with a > b".into()));
    }
    let a = pick(rng, &as_);
    let below: Vec<i64> = bs.into_iter().filter(|b| *b < a).collect();
    let b = pick(rng, &below);
    let statement = Expr::frac(power(v, a), power(v, b)).expect("nonzero denominator");
    Ok(Generated {
        statement: Value::Expr(statement),
        facts: exponent_facts(v, a, b),
    })
}

fn exponent_power(params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let v = pick_var(params, rng)?;
    let a = pick(rng, &ints(params, "a")?);
    let b = pick(rng, &ints(params, "b")?);
    Ok(Generated {
        statement: Value::Expr(Expr::pow(power(v, a), Expr::int(b))),
        facts: exponent_facts(v, a, b),
    })
}

fn squarefree(m: i64) -> bool {
    m >= 1 && (2..=m).take_while(|p| p * p <= m).all(|p| m % (p * p) != 0)
}

/// `sqrt(k^2 m)` with `k >= 2` and `m` squarefree.
fn radical_simplify(params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let ks: Vec<i64> = ints(params, "k")?.into_iter().filter(|k| *k >= 2).collect();
    let ms: Vec<i64> = ints(params, "m")?.into_iter().filter(|m| *m > 1 && squarefree(*m)).collect();
    if ks.is_empty() || ms.is_empty() {
        return Err(DomainError::Generator("radical parameters allow no k >= 2 or squarefree m".into()));
    }
    let k = pick(rng, &ks);
    let m = pick(rng, &ms);
    let n = k * k * m;
    Ok(Generated {
        statement: Value::Expr(Expr::sqrt(Expr::int(n))),
        facts: vec![Fact::new("problem.radicand", Value::int(n))],
    })
}

/// `v^2 + (r1 + r2) v + r1 r2` from two nonzero roots.
fn factor_quadratic(params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let v = pick_var(params, rng)?;
    let roots: Vec<i64> = ints(params, "root")?.into_iter().filter(|r| *r != 0).collect();
    if roots.is_empty() {
        return Err(DomainError::Generator("no nonzero roots allowed".into()));
    }
    let r1 = pick(rng, &roots);
    let r2 = pick(rng, &roots);
    let (b, c) = (r1 + r2, r1 * r2);
    let mut terms = vec![power(v, 2)];
    if b != 0 {
        terms.push(Expr::product([Expr::int(b), Expr::var(v)]));
    }
    terms.push(Expr::int(c));
    Ok(Generated {
        statement: Value::Expr(Expr::sum(terms)),
        facts: vec![
            Fact::new("problem.var", Value::Expr(Expr::var(v))),
            Fact::new("problem.b", Value::int(b)),
            Fact::new("problem.c", Value::int(c)),
        ],
    })
}

const RATIONAL_ATTEMPTS: usize = 10_000;

/// `a/v + b/c = d/e` whose solution `a c e / (d c - b e)` is nonzero with
/// numerator and denominator bounded by `bound` in lowest terms.
fn rational_equation(params: &Params, rng: &mut ChaCha8Rng) -> Result<Generated, DomainError> {
    let v = pick_var(params, rng)?;
    let [a_s, b_s, c_s, d_s, e_s] = ["a", "b", "c", "d", "e"].map(|n| ints(params, n));
    let (a_s, b_s, c_s, d_s, e_s) = (a_s?, b_s?, c_s?, d_s?, e_s?);
    let bound = scalar(params, "bound")?;
    for _ in 0..RATIONAL_ATTEMPTS {
        let (a, b, c, d, e) = (
            pick(rng, &a_s),
            pick(rng, &b_s),
            pick(rng, &c_s),
            pick(rng, &d_s),
            pick(rng, &e_s),
        );
        if a == 0 || c == 0 || e == 0 {
            continue;
        }
        let den = d * c - b * e;
        if den == 0 {
            continue;
        }
        let num = a * c * e;
        let g = num.gcd(&den);
        if (num / g).abs() > bound || (den / g).abs() > bound {
            continue;
        }
        let frac = |n: i64, d: Expr| Expr::frac(Expr::int(n), d).expect("nonzero denominator");
        let lhs = Expr::sum([frac(a, Expr::var(v)), frac(b, Expr::int(c))]);
        let rhs = frac(d, Expr::int(e));
        let mut facts = vec![Fact::new("problem.var", Value::Expr(Expr::var(v)))];
        for (slot, n) in [("a", a), ("b", b), ("c", c), ("d", d), ("e", e)] {
            facts.push(Fact::new(format!("problem.{slot}"), Value::int(n)));
        }
        return Ok(Generated {
            statement: Value::Equation(lhs, rhs),
            facts,
        });
    }
    Err(DomainError::Generator(format!(
        "no rational equation within bound {bound} after {RATIONAL_ATTEMPTS} draws"
    )))
}
