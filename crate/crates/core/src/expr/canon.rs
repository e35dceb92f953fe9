//! Canonical form.
//!
//! Canonical trees contain no `Neg` nodes and no non-constant `Frac` nodes:
//! negation becomes a `-1` coefficient and `a/b` becomes `a * b^-1`.
//! Rational constants are either `Int` or `Frac(Int, Int)` in lowest terms
//! with a positive denominator. Sums and products are flat and sorted by the
//! [`Expr`] ordering. A product holds at most one constant (its coefficient,
//! first) and at most one factor per base; a sum holds at most one constant
//! and one term per non-constant part.

use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};

use super::{Expr, Rational};

/// Normalise an expression. Idempotent; never fails.
pub fn canonicalize(e: &Expr) -> Expr {
    match e {
        Expr::Int(_) | Expr::Var(_) => e.clone(),
        Expr::Sum(ts) => mk_sum(ts.iter().map(canonicalize).collect()),
        Expr::Product(fs) => mk_product(fs.iter().map(canonicalize).collect()),
        Expr::Pow(b, x) => mk_pow(canonicalize(b), canonicalize(x)),
        Expr::Neg(x) => mk_product(vec![Expr::Int(-1), canonicalize(x)]),
        Expr::Frac(n, d) => {
            let n = canonicalize(n);
            let d = canonicalize(d);
            mk_product(vec![n, mk_pow(d, Expr::Int(-1))])
        }
        Expr::Radical(r, k) => mk_radical(canonicalize(r), *k),
    }
}

fn safe(q: Rational) -> Option<Rational> {
    (*q.numer() != i64::MIN && *q.denom() != i64::MIN).then_some(q)
}

fn checked_mul(a: &Rational, b: &Rational) -> Option<Rational> {
    a.checked_mul(b).and_then(safe)
}

fn checked_add(a: &Rational, b: &Rational) -> Option<Rational> {
    a.checked_add(b).and_then(safe)
}

fn checked_pow(base: Rational, exp: i64) -> Option<Rational> {
    if exp < 0 {
        if base.is_zero() {
            return None;
        }
        return checked_pow(base.recip(), exp.checked_neg()?);
    }
    let mut acc = Rational::one();
    let mut b = base;
    let mut e = exp as u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = checked_mul(&acc, &b)?;
        }
        e >>= 1;
        if e > 0 {
            b = checked_mul(&b, &b)?;
        }
    }
    Some(acc)
}

fn mk_sum(terms: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(terms.len());
    for t in terms {
        match t {
            Expr::Sum(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }

    let mut constant = Rational::zero();
    let mut leftovers: Vec<Expr> = Vec::new();
    let mut groups: Vec<(Expr, Rational)> = Vec::new();
    for t in flat {
        if let Some(q) = t.as_rational() {
            match checked_add(&constant, &q) {
                Some(c) => constant = c,
                None => leftovers.push(t),
            }
            continue;
        }
        let (coeff, rest) = split_coefficient(t);
        match groups.iter_mut().find(|(r, _)| *r == rest) {
            Some((_, c)) => match checked_add(c, &coeff) {
                Some(sum) => *c = sum,
                None => leftovers.push(with_coefficient(coeff, rest)),
            },
            None => groups.push((rest, coeff)),
        }
    }

    let mut out = Vec::new();
    if !constant.is_zero() {
        out.push(Expr::rational(constant));
    }
    out.extend(leftovers);
    for (rest, c) in groups {
        if !c.is_zero() {
            out.push(with_coefficient(c, rest));
        }
    }
    out.sort();
    match out.len() {
        0 => Expr::Int(0),
        1 => out.pop().unwrap(),
        _ => Expr::Sum(out),
    }
}

/// Split a canonical term into its rational coefficient and the remainder.
fn split_coefficient(t: Expr) -> (Rational, Expr) {
    if let Expr::Product(fs) = &t {
        if let Some(c) = fs.first().and_then(Expr::as_rational) {
            let rest_has_const = fs[1..].iter().any(|f| f.as_rational().is_some());
            if !rest_has_const {
                let mut rest: Vec<Expr> = fs[1..].to_vec();
                let rest = if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    Expr::Product(rest)
                };
                return (c, rest);
            }
        }
    }
    (Rational::one(), t)
}

fn with_coefficient(c: Rational, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![Expr::rational(c)];
    match rest {
        Expr::Product(inner) => fs.extend(inner),
        other => fs.push(other),
    }
    Expr::Product(fs)
}

/// Split a canonical sum into its leading coefficient and the sum divided by
/// it. The leading term is the one whose non-constant part is greatest, which
/// does not depend on scaling. `None` when the coefficient is already 1 or the
/// division overflows.
fn primitive_part(terms: &[Expr]) -> Option<(Rational, Expr)> {
    let (lead, _) = terms
        .iter()
        .filter(|t| t.as_rational().is_none())
        .map(|t| split_coefficient(t.clone()))
        .max_by(|a, b| a.1.cmp(&b.1))?;
    if lead.is_one() || lead.is_zero() {
        return None;
    }
    let inv = safe(lead.recip())?;
    let mut scaled = Vec::with_capacity(terms.len());
    for t in terms {
        let (c, rest) = split_coefficient(t.clone());
        let c = checked_mul(&c, &inv)?;
        scaled.push(match rest.as_rational() {
            Some(q) => Expr::rational(checked_mul(&q, &c)?),
            None => mk_product(vec![Expr::rational(c), rest]),
        });
    }
    scaled.sort();
    Some((lead, Expr::Sum(scaled)))
}

fn mk_product(factors: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(factors.len());
    for f in factors {
        match f {
            Expr::Product(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }

    let mut coeff = Rational::one();
    let mut leftovers: Vec<Expr> = Vec::new();
    let mut groups: Vec<(Expr, Vec<Expr>)> = Vec::new();
    for f in flat {
        if let Some(q) = f.as_rational() {
            if q.is_zero() {
                return Expr::Int(0);
            }
            match checked_mul(&coeff, &q) {
                Some(c) => coeff = c,
                None => leftovers.push(f),
            }
            continue;
        }
        let f = match f {
            Expr::Sum(terms) => match primitive_part(&terms) {
                Some((content, primitive)) => match checked_mul(&coeff, &content) {
                    Some(c) => {
                        coeff = c;
                        primitive
                    }
                    None => Expr::Sum(terms),
                },
                None => Expr::Sum(terms),
            },
            other => other,
        };
        let (base, exp) = match f {
            Expr::Pow(b, e) => (*b, *e),
            other => (other, Expr::Int(1)),
        };
        match groups.iter_mut().find(|(b, _)| *b == base) {
            Some((_, exps)) => exps.push(exp),
            None => groups.push((base, vec![exp])),
        }
    }

    let mut rest = Vec::new();
    let mut reflatten = false;
    for (base, mut exps) in groups {
        let merged = if exps.len() == 1 {
            let exp = exps.pop().unwrap();
            if exp == Expr::Int(1) {
                base
            } else {
                Expr::Pow(Box::new(base), Box::new(exp))
            }
        } else {
            mk_pow(base, mk_sum(exps))
        };
        if let Some(q) = merged.as_rational() {
            if q.is_zero() {
                return Expr::Int(0);
            }
            match checked_mul(&coeff, &q) {
                Some(c) => coeff = c,
                None => leftovers.push(merged),
            }
            continue;
        }
        if matches!(merged, Expr::Product(_)) {
            reflatten = true;
        }
        rest.push(merged);
    }
    // Simplifying a merged power can expose a base another factor already
    // uses, as in sqrt(x) * x * sqrt(x).
    let base_of = |f: &Expr| match f {
        Expr::Pow(b, _) => (**b).clone(),
        other => other.clone(),
    };
    for (i, f) in rest.iter().enumerate() {
        let b = base_of(f);
        if rest[i + 1..].iter().any(|g| base_of(g) == b) {
            reflatten = true;
        }
    }

    if reflatten {
        let mut again = vec![Expr::rational(coeff)];
        again.extend(leftovers);
        again.extend(rest);
        return mk_product(again);
    }

    // A coefficient never sits beside a sum: it is distributed into the first
    // sum factor, so -(x+1) becomes -x - 1 and 2(x+1)y becomes (2x + 2)y.
    if leftovers.is_empty() && !coeff.is_one() {
        rest.sort();
        if let Some(i) = rest.iter().position(|f| matches!(f, Expr::Sum(_))) {
            let Expr::Sum(terms) = &rest[i] else { unreachable!() };
            let scale = Expr::rational(coeff);
            rest[i] = mk_sum(
                terms
                    .iter()
                    .map(|t| mk_product(vec![scale.clone(), t.clone()]))
                    .collect(),
            );
            rest.sort();
            return if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Expr::Product(rest)
            };
        }
    }

    let mut out = Vec::new();
    if !coeff.is_one() || (rest.is_empty() && leftovers.is_empty()) {
        out.push(Expr::rational(coeff));
    }
    out.extend(leftovers);
    out.extend(rest);
    out.sort();
    match out.len() {
        1 => out.pop().unwrap(),
        _ => Expr::Product(out),
    }
}

fn mk_pow(base: Expr, exp: Expr) -> Expr {
    if let Some(q) = exp.as_rational() {
        if q.is_zero() {
            return Expr::Int(1);
        }
        if q.is_one() {
            return base;
        }
    }
    if let Some(bq) = base.as_rational() {
        if bq.is_one() {
            return Expr::Int(1);
        }
        if let Some(n) = exp.as_int() {
            if let Some(v) = checked_pow(bq, n) {
                return Expr::rational(v);
            }
        }
        if bq.is_zero() && exp.as_rational().is_some_and(|q| q.is_positive()) {
            return Expr::Int(0);
        }
    }
    if let Some(n) = exp.as_int() {
        match &base {
            Expr::Pow(b, e) => {
                if let Some(p) = e.as_int().and_then(|m| m.checked_mul(n)) {
                    return mk_pow((**b).clone(), Expr::Int(p));
                }
            }
            Expr::Product(fs) => {
                return mk_product(fs.iter().map(|f| mk_pow(f.clone(), Expr::Int(n))).collect());
            }
            Expr::Radical(r, k) if n % i64::from(*k) == 0 => {
                return mk_pow((**r).clone(), Expr::Int(n / i64::from(*k)));
            }
            _ => {}
        }
    }
    Expr::Pow(Box::new(base), Box::new(exp))
}

fn mk_radical(r: Expr, k: u32) -> Expr {
    if k < 2 {
        return if k == 1 { r } else { Expr::Radical(Box::new(r), k) };
    }
    if let Expr::Int(n) = r {
        if n >= 0 {
            let (outside, inside) = extract_root(n as u64, k);
            let inner = if inside == 1 {
                Expr::Int(1)
            } else {
                Expr::Radical(Box::new(Expr::Int(inside as i64)), k)
            };
            return mk_product(vec![Expr::Int(outside as i64), inner]);
        }
        if k % 2 == 1 && n != i64::MIN {
            return mk_product(vec![Expr::Int(-1), mk_radical(Expr::Int(-n), k)]);
        }
    }
    Expr::Radical(Box::new(r), k)
}

fn checked_upow(base: u64, k: u32) -> Option<u64> {
    base.checked_pow(k)
}

/// Write `n = outside^k * inside` with `outside` as large as trial division
/// up to a fixed bound (plus a perfect-power check on the cofactor) can make it.
fn extract_root(n: u64, k: u32) -> (u64, u64) {
    if n < 2 {
        return (n, 1);
    }
    const TRIAL_LIMIT: u64 = 100_000;
    let mut outside = 1u64;
    let mut inside = 1u64;
    let mut rest = n;
    let mut p = 2u64;
    while p <= TRIAL_LIMIT && p * p <= rest {
        if rest.is_multiple_of(p) {
            let mut count = 0u32;
            while rest.is_multiple_of(p) {
                rest /= p;
                count += 1;
            }
            outside *= p.pow(count / k);
            inside *= p.pow(count % k);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        let r = integer_root(rest, k);
        if checked_upow(r, k) == Some(rest) {
            outside *= r;
        } else {
            inside *= rest;
        }
    }
    (outside, inside)
}

fn integer_root(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / f64::from(k)).round() as u64;
    while r > 0 && checked_upow(r, k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while checked_upow(r + 1, k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// Coefficients `(a, b)` with `e = a*var + b` when `e` is linear in `var`
/// with rational coefficients.
pub fn linear_coefficients(e: &Expr, var: char) -> Option<(Rational, Rational)> {
    let c = canonicalize(e);
    let terms: Vec<Expr> = match c {
        Expr::Sum(ts) => ts,
        other => vec![other],
    };
    let mut a = Rational::zero();
    let mut b = Rational::zero();
    for t in terms {
        if let Some(q) = t.as_rational() {
            b = checked_add(&b, &q)?;
            continue;
        }
        let (coeff, rest) = split_coefficient(t);
        if rest != Expr::Var(var) {
            return None;
        }
        a = checked_add(&a, &coeff)?;
    }
    Some((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn canon(s: &str) -> Expr {
        canonicalize(&parse(s).unwrap())
    }

    #[test]
    fn additive_identity() {
        assert_eq!(canon("x + 0"), Expr::var('x'));
    }

    #[test]
    fn like_powers_combine() {
        assert_eq!(canon("x^3 * x^4"), Expr::pow(Expr::var('x'), Expr::int(7)));
        assert_eq!(canon("x^3 * x^4"), canon("x^7"));
    }

    #[test]
    fn constants_fold() {
        assert_eq!(
            canon("3*2*x"),
            Expr::product([Expr::int(6), Expr::var('x')])
        );
        assert_eq!(canon("3*2*x").to_plain(), "6x");
        assert_eq!(canon("1/2 + 1/3"), Expr::rational(Rational::new(5, 6)));
        assert_eq!(canon("2^-2"), Expr::rational(Rational::new(1, 4)));
    }

    #[test]
    fn identities() {
        assert_eq!(canon("x^1"), Expr::var('x'));
        assert_eq!(canon("x^0"), Expr::int(1));
        assert_eq!(canon("1*y"), Expr::var('y'));
        assert_eq!(canon("0*(x+y)"), Expr::int(0));
        assert_eq!(canon("x - x"), Expr::int(0));
        assert_eq!(canon("x/x"), Expr::int(1));
    }

    #[test]
    fn operand_order_is_fixed() {
        assert_eq!(canon("y + x + 2"), canon("2 + x + y"));
        assert_eq!(canon("y*x*3"), canon("3xy"));
    }

    #[test]
    fn radicals_simplify() {
        assert_eq!(canon("sqrt(50)"), canon("5sqrt(2)"));
        assert_eq!(canon("sqrt(49)"), Expr::int(7));
        assert_eq!(canon("cbrt(-8)"), Expr::int(-2));
        assert_eq!(canon("cbrt(54)"), canon("3cbrt(2)"));
        assert_eq!(canon("sqrt(2)*sqrt(2)"), Expr::int(2));
        assert_eq!(canon("sqrt(0)"), Expr::int(0));
        assert_eq!(canon("sqrt(1)"), Expr::int(1));
    }

    #[test]
    fn extract_root_factors() {
        assert_eq!(extract_root(50, 2), (5, 2));
        assert_eq!(extract_root(72, 2), (6, 2));
        assert_eq!(extract_root(81, 2), (9, 1));
        assert_eq!(extract_root(48, 3), (2, 6));
        assert_eq!(extract_root(13, 2), (1, 13));
        // prime squared beyond the trial bound
        let big = 1_000_003u64 * 1_000_003;
        assert_eq!(extract_root(big, 2), (1_000_003, 1));
    }

    #[test]
    fn negation_distributes_over_sum() {
        assert_eq!(canon("-(x+1)"), canon("-x - 1"));
        assert_eq!(canon("x - (x + 1)"), Expr::int(-1));
    }

    #[test]
    fn power_rules() {
        assert_eq!(canon("(x^2)^3"), canon("x^6"));
        assert_eq!(canon("(2x)^2"), canon("4x^2"));
        assert_eq!(canon("x^2/x^5"), canon("x^-3"));
    }

    #[test]
    fn idempotent_on_examples() {
        for s in [
            "x + 0",
            "(x+2)(x+3)",
            "3/(x-1) + 2",
            "-(x^2 - 3x)/4",
            "sqrt(12x) + cbrt(16)",
            "2^x * 2^3",
            "(x+1)^2 (x+1)^-1",
        ] {
            let once = canon(s);
            assert_eq!(canonicalize(&once), once, "{s}");
        }
    }

    #[test]
    fn linear_coefficient_extraction() {
        let (a, b) = linear_coefficients(&parse("3x + 2 - x/2").unwrap(), 'x').unwrap();
        assert_eq!(a, Rational::new(5, 2));
        assert_eq!(b, Rational::from_integer(2));
        assert!(linear_coefficients(&parse("x^2").unwrap(), 'x').is_none());
    }
}
