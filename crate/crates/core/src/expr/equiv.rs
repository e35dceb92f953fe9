use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canonicalize, evaluate, Expr};

/// Number of agreeing sample points required for numeric equivalence.
pub const SAMPLE_POINTS: usize = 12;
const MAX_REDRAWS: usize = 100;
const RELATIVE_TOLERANCE: f64 = 1e-9;
const SAMPLE_SEED: u64 = 0x5eed_a1e6_b7a0_0001;

/// Outcome of comparing two expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equivalence {
    /// Canonical forms are identical.
    Canonical,
    /// Canonical forms differ but every sample point agrees.
    Numeric,
    NotEquivalent,
    /// Too many sample points were singular to decide.
    Undecidable,
}

impl Equivalence {
    pub fn holds(self) -> bool {
        matches!(self, Equivalence::Canonical | Equivalence::Numeric)
    }
}

/// `true` iff the expressions are equivalent; undecidable counts as not.
pub fn equivalent(a: &Expr, b: &Expr) -> bool {
    check_equivalence(a, b).holds()
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= RELATIVE_TOLERANCE * x.abs().max(y.abs()).max(1.0)
}

/// Two-tier comparison: canonical equality first, otherwise agreement at
/// [`SAMPLE_POINTS`] pseudo-random rational points. Points where either side
/// divides by a near-zero value or takes an even root of a negative are
/// redrawn, at most 100 times in total.
pub fn check_equivalence(a: &Expr, b: &Expr) -> Equivalence {
    let ca = canonicalize(a);
    let cb = canonicalize(b);
    if ca == cb {
        return Equivalence::Canonical;
    }

    let mut vars: Vec<char> = a.free_vars().union(&b.free_vars()).copied().collect();
    vars.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut agreed = 0;
    let mut redraws = 0;
    let mut values = vec![0.0f64; vars.len()];
    while agreed < SAMPLE_POINTS {
        for v in values.iter_mut() {
            let num: i64 = rng.gen_range(-40..=40);
            let den: i64 = rng.gen_range(1..=9);
            *v = num as f64 / den as f64;
        }
        let env = |c: char| vars.iter().position(|&v| v == c).map(|i| values[i]);
        match (evaluate(a, &env), evaluate(b, &env)) {
            (Ok(x), Ok(y)) => {
                if !close(x, y) {
                    return Equivalence::NotEquivalent;
                }
                agreed += 1;
                if vars.is_empty() {
                    // every point is the same point
                    break;
                }
            }
            _ => {
                redraws += 1;
                if redraws > MAX_REDRAWS || vars.is_empty() {
                    return Equivalence::Undecidable;
                }
            }
        }
    }
    Equivalence::Numeric
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn check(a: &str, b: &str) -> Equivalence {
        check_equivalence(&parse(a).unwrap(), &parse(b).unwrap())
    }

    #[test]
    fn cancellation() {
        assert_eq!(check("x - x", "0"), Equivalence::Canonical);
    }

    #[test]
    fn expanded_product() {
        assert_eq!(check("(x+2)(x+3)", "x^2+5x+6"), Equivalence::Numeric);
    }

    #[test]
    fn different_powers() {
        assert_eq!(check("x^2", "x^3"), Equivalence::NotEquivalent);
        assert!(!equivalent(&parse("x^2").unwrap(), &parse("x^3").unwrap()));
    }

    #[test]
    fn evaluated_at_two_oracle() {
        // x = 2 separates them by hand: 4 vs 8
        let env = |_: char| Some(2.0);
        assert_eq!(evaluate(&parse("x^2").unwrap(), &env).unwrap(), 4.0);
        assert_eq!(evaluate(&parse("x^3").unwrap(), &env).unwrap(), 8.0);
    }

    #[test]
    fn undefined_everywhere_is_undecidable() {
        assert_eq!(check("sqrt(-1 - x^2)", "0*x + 1"), Equivalence::Undecidable);
        assert_eq!(check("sqrt(-4)", "2"), Equivalence::Undecidable);
        assert!(!equivalent(&parse("sqrt(-4)").unwrap(), &parse("2").unwrap()));
    }

    #[test]
    fn rational_functions() {
        assert_eq!(check("1/x + 1/y", "(x+y)/(xy)"), Equivalence::Numeric);
        assert_eq!(check("(x^2-1)/(x-1)", "x+1"), Equivalence::Numeric);
        assert_eq!(check("1/x", "1/y"), Equivalence::NotEquivalent);
    }

    #[test]
    fn symmetric_on_examples() {
        for (a, b) in [("x^4*x^3", "x^7"), ("sqrt(8)", "2sqrt(2)"), ("x+1", "x+2")] {
            assert_eq!(check(a, b).holds(), check(b, a).holds());
        }
    }
}
