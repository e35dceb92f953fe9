use super::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// The input grammar; round-trips through `parse`.
    Plain,
    /// Display only.
    Latex,
}

pub fn render(e: &Expr, format: Format) -> String {
    match format {
        Format::Plain => plain(e),
        Format::Latex => latex(e),
    }
}

fn is_constant(e: &Expr) -> bool {
    e.as_rational().is_some()
}

/// Rough polynomial degree, used only to order terms for display.
fn display_degree(e: &Expr) -> i64 {
    match e {
        Expr::Var(_) => 1,
        Expr::Pow(b, x) => match (b.as_ref(), x.as_int()) {
            (Expr::Var(_), Some(n)) => n,
            _ => 0,
        },
        Expr::Product(fs) => fs.iter().map(display_degree).sum(),
        Expr::Neg(x) => display_degree(x),
        _ => 0,
    }
}

/// Terms in display order: highest degree first, constants last. Purely
/// presentational; the canonical order is left untouched in the tree.
fn display_terms(ts: &[Expr]) -> Vec<&Expr> {
    let mut out: Vec<&Expr> = ts.iter().collect();
    out.sort_by_key(|t| (is_constant(t), -display_degree(t)));
    out
}

/// Split a term into sign and magnitude so sums print as `a - b`.
fn split_sign(term: &Expr) -> Option<Expr> {
    match term {
        Expr::Int(n) if *n < 0 && *n != i64::MIN => Some(Expr::Int(-n)),
        Expr::Neg(x) => Some((**x).clone()),
        Expr::Frac(n, d) => match n.as_ref() {
            Expr::Int(p) if *p < 0 && *p != i64::MIN => {
                Some(Expr::Frac(Box::new(Expr::Int(-p)), d.clone()))
            }
            _ => None,
        },
        Expr::Product(fs) if fs.len() >= 2 => {
            let head = split_sign(&fs[0])?;
            if !is_constant(&fs[0]) {
                return None;
            }
            let mut rest: Vec<Expr> = Vec::with_capacity(fs.len());
            if head != Expr::Int(1) {
                rest.push(head);
            }
            rest.extend(fs[1..].iter().cloned());
            Some(if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Expr::Product(rest)
            })
        }
        _ => None,
    }
}

fn paren(s: String) -> String {
    format!("({s})")
}

fn plain(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Var(c) => c.to_string(),
        Expr::Sum(ts) => {
            if ts.is_empty() {
                return "0".into();
            }
            let ordered = display_terms(ts);
            let mut out = String::new();
            for (i, t) in ordered.into_iter().enumerate() {
                if i == 0 {
                    let s = plain(t);
                    out.push_str(&if matches!(t, Expr::Sum(_)) { paren(s) } else { s });
                    continue;
                }
                match split_sign(t) {
                    Some(mag) => {
                        let s = plain(&mag);
                        let s = if matches!(mag, Expr::Sum(_)) || s.starts_with('-') {
                            paren(s)
                        } else {
                            s
                        };
                        out.push_str(" - ");
                        out.push_str(&s);
                    }
                    None => {
                        let s = plain(t);
                        let s = if matches!(t, Expr::Sum(_)) || s.starts_with('-') {
                            paren(s)
                        } else {
                            s
                        };
                        out.push_str(" + ");
                        out.push_str(&s);
                    }
                }
            }
            out
        }
        Expr::Product(fs) => plain_product(fs),
        Expr::Neg(x) => {
            let s = plain(x);
            if matches!(x.as_ref(), Expr::Sum(_)) || s.starts_with('-') {
                format!("-({s})")
            } else {
                format!("-{s}")
            }
        }
        Expr::Frac(n, d) => {
            let ns = plain(n);
            let ns = if matches!(n.as_ref(), Expr::Sum(_) | Expr::Frac(..)) {
                paren(ns)
            } else {
                ns
            };
            let ds = plain(d);
            let ds = match d.as_ref() {
                Expr::Int(k) if *k >= 0 => ds,
                Expr::Var(_) | Expr::Radical(..) | Expr::Pow(..) => ds,
                _ => paren(ds),
            };
            format!("{ns}/{ds}")
        }
        Expr::Pow(b, x) => {
            let bs = plain(b);
            let bs = match b.as_ref() {
                Expr::Int(k) if *k >= 0 => bs,
                Expr::Var(_) | Expr::Radical(..) => bs,
                _ => paren(bs),
            };
            let xs = plain(x);
            let xs = match x.as_ref() {
                Expr::Int(k) if *k >= 0 => xs,
                Expr::Var(_) => xs,
                _ => paren(xs),
            };
            format!("{bs}^{xs}")
        }
        Expr::Radical(r, k) => match k {
            2 => format!("sqrt({})", plain(r)),
            3 => format!("cbrt({})", plain(r)),
            _ => format!("root({}, {k})", plain(r)),
        },
    }
}

fn plain_factor(f: &Expr) -> String {
    let s = plain(f);
    match f {
        Expr::Int(k) if *k >= 0 => s,
        Expr::Var(_) | Expr::Radical(..) | Expr::Pow(..) => s,
        _ => paren(s),
    }
}

fn plain_product(fs: &[Expr]) -> String {
    match fs.len() {
        0 => return "1".into(),
        1 => return plain(&fs[0]),
        _ => {}
    }
    let (prefix, rest) = if fs[0] == Expr::Int(-1) {
        ("-", &fs[1..])
    } else {
        ("", fs)
    };
    let mut pieces: Vec<String> = Vec::with_capacity(rest.len());
    for (i, f) in rest.iter().enumerate() {
        let leading_int = i == 0 && prefix.is_empty() && matches!(f, Expr::Int(_));
        pieces.push(if leading_int { plain(f) } else { plain_factor(f) });
    }
    let mut out = String::from(prefix);
    let mut prev_is_coefficient = false;
    for (i, piece) in pieces.iter().enumerate() {
        if i > 0 {
            let juxtapose = piece.starts_with('(')
                || (prev_is_coefficient && piece.starts_with(|c: char| c.is_ascii_alphabetic()));
            if !juxtapose {
                out.push('*');
            }
        }
        out.push_str(piece);
        prev_is_coefficient = i == 0 && matches!(rest[0], Expr::Int(_));
    }
    out
}

fn latex(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Var(c) => c.to_string(),
        Expr::Sum(ts) => {
            if ts.is_empty() {
                return "0".into();
            }
            let mut out = String::new();
            for (i, t) in display_terms(ts).into_iter().enumerate() {
                if i == 0 {
                    out.push_str(&latex(t));
                    continue;
                }
                match split_sign(t) {
                    Some(mag) => {
                        out.push_str(" - ");
                        let s = latex(&mag);
                        out.push_str(&if matches!(mag, Expr::Sum(_)) {
                            format!("\\left({s}\\right)")
                        } else {
                            s
                        });
                    }
                    None => {
                        out.push_str(" + ");
                        out.push_str(&latex(t));
                    }
                }
            }
            out
        }
        Expr::Product(fs) => {
            if fs.is_empty() {
                return "1".into();
            }
            let (prefix, rest) = if fs.len() > 1 && fs[0] == Expr::Int(-1) {
                ("-", &fs[1..])
            } else {
                ("", &fs[..])
            };
            let mut out = String::from(prefix);
            for (i, f) in rest.iter().enumerate() {
                let s = latex(f);
                let s = match f {
                    Expr::Sum(_) | Expr::Neg(_) => format!("\\left({s}\\right)"),
                    Expr::Int(k) if *k < 0 && i > 0 => format!("\\left({s}\\right)"),
                    _ => s,
                };
                if i > 0 {
                    let numeric_next = matches!(f, Expr::Int(_))
                        || matches!(f, Expr::Frac(n, _) if matches!(n.as_ref(), Expr::Int(_)));
                    if numeric_next {
                        out.push_str(" \\cdot ");
                    }
                }
                out.push_str(&s);
            }
            out
        }
        Expr::Neg(x) => {
            let s = latex(x);
            if matches!(x.as_ref(), Expr::Sum(_)) || s.starts_with('-') {
                format!("-\\left({s}\\right)")
            } else {
                format!("-{s}")
            }
        }
        Expr::Frac(n, d) => format!("\\frac{{{}}}{{{}}}", latex(n), latex(d)),
        Expr::Pow(b, x) => {
            let bs = latex(b);
            let bs = match b.as_ref() {
                Expr::Int(k) if *k >= 0 => bs,
                Expr::Var(_) | Expr::Radical(..) => bs,
                _ => format!("\\left({bs}\\right)"),
            };
            format!("{bs}^{{{}}}", latex(x))
        }
        Expr::Radical(r, k) => match k {
            2 => format!("\\sqrt{{{}}}", latex(r)),
            _ => format!("\\sqrt[{k}]{{{}}}", latex(r)),
        },
    }
}
