use thiserror::Error;

use super::Expr;

/// Denominators with smaller magnitude are treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` has no value")]
    Unbound(char),
    #[error("denominator {0} is below the singularity threshold")]
    NearSingular(f64),
    #[error("even root of a negative number")]
    EvenRootOfNegative,
    #[error("result is not finite")]
    NonFinite,
}

/// Floating-point value of `e` with variables looked up through `env`.
///
/// Refuses to divide by anything smaller than [`SINGULARITY_THRESHOLD`] in
/// magnitude and to take even roots (or non-integer powers) of negatives.
pub fn evaluate(e: &Expr, env: &dyn Fn(char) -> Option<f64>) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Int(n) => *n as f64,
        Expr::Var(c) => env(*c).ok_or(EvalError::Unbound(*c))?,
        Expr::Sum(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += evaluate(t, env)?;
            }
            acc
        }
        Expr::Product(fs) => {
            let mut acc = 1.0;
            for f in fs {
                acc *= evaluate(f, env)?;
            }
            acc
        }
        Expr::Neg(x) => -evaluate(x, env)?,
        Expr::Frac(n, d) => {
            let den = evaluate(d, env)?;
            if den.abs() < SINGULARITY_THRESHOLD {
                return Err(EvalError::NearSingular(den));
            }
            evaluate(n, env)? / den
        }
        Expr::Pow(b, x) => power(evaluate(b, env)?, evaluate(x, env)?)?,
        Expr::Radical(r, k) => root(evaluate(r, env)?, *k)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn power(base: f64, exp: f64) -> Result<f64, EvalError> {
    if exp < 0.0 && base.abs() < SINGULARITY_THRESHOLD {
        return Err(EvalError::NearSingular(base));
    }
    let rounded = exp.round();
    if (exp - rounded).abs() < 1e-12 && rounded.abs() < i32::MAX as f64 {
        return Ok(base.powi(rounded as i32));
    }
    if base < 0.0 {
        return Err(EvalError::EvenRootOfNegative);
    }
    Ok(base.powf(exp))
}

fn root(radicand: f64, index: u32) -> Result<f64, EvalError> {
    if index.is_multiple_of(2) {
        if radicand < 0.0 {
            return Err(EvalError::EvenRootOfNegative);
        }
        if index == 2 {
            return Ok(radicand.sqrt());
        }
        return Ok(radicand.powf(1.0 / f64::from(index)));
    }
    if index == 3 {
        return Ok(radicand.cbrt());
    }
    Ok(radicand.signum() * radicand.abs().powf(1.0 / f64::from(index)))
}
