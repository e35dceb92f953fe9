use std::collections::BTreeMap;

use num_integer::Integer;

use crate::expr::{canonicalize, linear_coefficients, Expr, Rational};
use crate::value::Value;

/// A rule action: pure function of the bound arguments. `None` means the
/// primitive does not apply to these arguments.
pub type ActionFn = fn(&[Value]) -> Option<Value>;

/// Fixed table of arithmetic and algebraic primitives that rule files may
/// reference by name.
#[derive(Clone)]
pub struct ActionRegistry {
    actions: BTreeMap<&'static str, ActionFn>,
}

impl std::fmt::Debug for ActionRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.actions.keys()).finish()
    }
}

impl ActionRegistry {
    pub fn builtin() -> Self {
        let table: [(&'static str, ActionFn); 15] = [
            ("add", add),
            ("subtract", subtract),
            ("multiply", multiply),
            ("power", power),
            ("largest_square_factor", largest_square_factor),
            ("integer_sqrt", integer_sqrt),
            ("simplified_radical", simplified_radical),
            ("factor_pair", factor_pair),
            ("swap_pair", swap_pair),
            ("factored_form", factored_form),
            ("lcd", lcd),
            ("clear_denominators", clear_denominators),
            ("solve_linear", solve_linear),
            ("excluded_value", excluded_value),
            ("identity", identity),
        ];
        ActionRegistry {
            actions: table.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<ActionFn> {
        self.actions.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.actions.keys().copied()
    }
}

fn expr_arg(args: &[Value], i: usize) -> Option<&Expr> {
    args.get(i)?.as_expr()
}

fn int_arg(args: &[Value], i: usize) -> Option<i64> {
    args.get(i)?.as_int()
}

fn var_arg(args: &[Value], i: usize) -> Option<char> {
    match expr_arg(args, i)? {
        Expr::Var(v) => Some(*v),
        _ => None,
    }
}

fn identity(args: &[Value]) -> Option<Value> {
    args.first().cloned()
}

fn add(args: &[Value]) -> Option<Value> {
    let (a, b) = (expr_arg(args, 0)?, expr_arg(args, 1)?);
    Some(Value::Expr(canonicalize(&Expr::sum([a.clone(), b.clone()]))))
}

fn subtract(args: &[Value]) -> Option<Value> {
    let (a, b) = (expr_arg(args, 0)?, expr_arg(args, 1)?);
    Some(Value::Expr(canonicalize(&Expr::sum([
        a.clone(),
        Expr::neg(b.clone()),
    ]))))
}

fn multiply(args: &[Value]) -> Option<Value> {
    let (a, b) = (expr_arg(args, 0)?, expr_arg(args, 1)?);
    Some(Value::Expr(canonicalize(&Expr::product([a.clone(), b.clone()]))))
}

/// `base^exponent` written literally, as a student would.
fn power(args: &[Value]) -> Option<Value> {
    let base = expr_arg(args, 0)?.clone();
    let exponent = canonicalize(expr_arg(args, 1)?);
    Some(Value::Expr(match exponent {
        Expr::Int(1) => base,
        Expr::Int(0) => Expr::Int(1),
        e => Expr::pow(base, e),
    }))
}

fn isqrt(n: i64) -> i64 {
    if n < 2 {
        return n.max(0);
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Largest perfect square dividing `n`.
fn largest_square_factor(args: &[Value]) -> Option<Value> {
    let n = int_arg(args, 0)?;
    if n < 1 {
        return None;
    }
    let k = (1..=isqrt(n)).rev().find(|k| n % (k * k) == 0)?;
    Some(Value::int(k * k))
}

fn integer_sqrt(args: &[Value]) -> Option<Value> {
    let s = int_arg(args, 0)?;
    let r = isqrt(s);
    (s >= 0 && r * r == s).then(|| Value::int(r))
}

/// `k * sqrt(n / square)`, dropping the radical when nothing is left under it.
fn simplified_radical(args: &[Value]) -> Option<Value> {
    let n = int_arg(args, 0)?;
    let square = int_arg(args, 1)?;
    let k = int_arg(args, 2)?;
    if square <= 0 || n % square != 0 || k * k != square {
        return None;
    }
    let inside = n / square;
    Some(Value::Expr(if inside == 1 {
        Expr::Int(k)
    } else if k == 1 {
        Expr::sqrt(Expr::Int(inside))
    } else {
        Expr::product([Expr::Int(k), Expr::sqrt(Expr::Int(inside))])
    }))
}

/// Integers `(p, q)`, `p <= q`, with `p + q = b` and `p * q = c`.
fn factor_pair(args: &[Value]) -> Option<Value> {
    let b = int_arg(args, 0)?;
    let c = int_arg(args, 1)?;
    let pair = |p: i64, q: i64| Value::Tuple(vec![Expr::Int(p.min(q)), Expr::Int(p.max(q))]);
    if c == 0 {
        return Some(pair(0, b));
    }
    let bound = c.checked_abs()?;
    (-bound..=bound)
        .filter(|&p| p != 0 && c % p == 0)
        .find(|&p| p + c / p == b)
        .map(|p| pair(p, c / p))
}

fn swap_pair(args: &[Value]) -> Option<Value> {
    match args.first()? {
        Value::Tuple(items) if items.len() == 2 => {
            Some(Value::Tuple(vec![items[1].clone(), items[0].clone()]))
        }
        _ => None,
    }
}

/// `(v + p)(v + q)` from the pair `(p, q)`.
fn factored_form(args: &[Value]) -> Option<Value> {
    let v = expr_arg(args, 0)?.clone();
    let (p, q) = match args.get(1)? {
        Value::Tuple(items) if items.len() == 2 => (items[0].clone(), items[1].clone()),
        _ => return None,
    };
    let factor = |r: Expr| {
        if r == Expr::Int(0) {
            v.clone()
        } else {
            Expr::sum([v.clone(), r])
        }
    };
    Some(Value::Expr(Expr::product([factor(p), factor(q)])))
}

/// Least common denominator of `a/v`, `b/c`, `d/e`: `lcm(c, e) * v`.
fn lcd(args: &[Value]) -> Option<Value> {
    let v = expr_arg(args, 0)?.clone();
    let c = int_arg(args, 1)?;
    let e = int_arg(args, 2)?;
    if c == 0 || e == 0 {
        return None;
    }
    let l = c.lcm(&e);
    Some(Value::Expr(if l == 1 {
        v
    } else {
        Expr::product([Expr::Int(l), v])
    }))
}

/// Multiply both sides of `a/v + b/c = d/e` through by the LCD.
fn clear_denominators(args: &[Value]) -> Option<Value> {
    let v = expr_arg(args, 0)?.clone();
    let [a, b, c, d, e] = [1, 2, 3, 4, 5].map(|i| expr_arg(args, i).cloned());
    let (a, b, c, d, e) = (a?, b?, c?, d?, e?);
    let lcd = expr_arg(args, 6)?.clone();
    let times_lcd = |num: Expr, den: Expr| -> Option<Expr> {
        let f = Expr::frac(num, den).ok()?;
        Some(canonicalize(&Expr::product([f, lcd.clone()])))
    };
    let lhs = canonicalize(&Expr::sum([times_lcd(a, v)?, times_lcd(b, c)?]));
    let rhs = times_lcd(d, e)?;
    Some(Value::Equation(lhs, rhs))
}

fn solve_linear(args: &[Value]) -> Option<Value> {
    let (lhs, rhs) = match args.first()? {
        Value::Equation(l, r) => (l.clone(), r.clone()),
        _ => return None,
    };
    let v = var_arg(args, 1)?;
    let diff = Expr::sum([lhs, Expr::neg(rhs)]);
    let (slope, intercept) = linear_coefficients(&diff, v)?;
    if slope == Rational::from_integer(0) {
        return None;
    }
    Some(Value::Expr(Expr::rational(-intercept / slope)))
}

/// The value the variable denominator excludes (zero), provided the candidate
/// solution avoids it.
fn excluded_value(args: &[Value]) -> Option<Value> {
    let _v = var_arg(args, 0)?;
    let solution = canonicalize(expr_arg(args, 1)?);
    (solution != Expr::Int(0)).then(|| Value::int(0))
}
