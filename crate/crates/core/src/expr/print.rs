//! Plain-text printer. The output is accepted by [`super::parse`].

use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Atom, Expr, FuncSym, Monomial, Rational};

pub(super) fn write_atom(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    match a {
        Atom::Param(p) => f.write_str(p),
        Atom::Var(v) => f.write_str(v.name()),
        Atom::Jet(j) if j.order() == 0 => f.write_str("u"),
        Atom::Jet(j) => write!(f, "u_{}", j.suffix()),
        Atom::Ode(0) => f.write_str("U"),
        Atom::Ode(k) => write!(f, "U_{}", "y".repeat(*k as usize)),
        Atom::Func(g) => write_func(f, g),
        Atom::Ln(s) => write!(f, "ln({})", s.name()),
        Atom::Exp(arg) => write!(f, "exp({})", arg),
    }
}

fn write_func(f: &mut fmt::Formatter<'_>, g: &FuncSym) -> fmt::Result {
    let args: Vec<&str> = g.args.iter().map(|a| a.name()).collect();
    if g.args.len() == 1 {
        let k = g.orders[0];
        if k >= 0 {
            write!(f, "{}{}", g.name, "p".repeat(k as usize))?;
        } else {
            for _ in 1..-k {
                f.write_str("int_")?;
            }
            let mut cs = g.name.chars();
            if let Some(c) = cs.next() {
                write!(f, "{}{}", c.to_ascii_uppercase(), cs.as_str())?;
            }
        }
    } else {
        f.write_str(&g.name)?;
        let suffix: String = g
            .args
            .iter()
            .zip(&g.orders)
            .map(|(a, k)| a.name().repeat((*k).max(0) as usize))
            .collect();
        if !suffix.is_empty() {
            write!(f, "_{}", suffix)?;
        }
    }
    write!(f, "({})", args.join(","))
}

fn write_exponent(out: &mut String, e: &Rational) {
    if e.is_one() {
        return;
    }
    if e.is_integer() && e.is_positive() {
        let _ = write!(out, "^{}", e);
    } else {
        let _ = write!(out, "^({})", e);
    }
}

pub(super) fn write_monomial(f: &mut fmt::Formatter<'_>, m: &Monomial) -> fmt::Result {
    f.write_str(&monomial_string(m))
}

fn monomial_string(m: &Monomial) -> String {
    let mut out = String::new();
    for (i, (a, e)) in m.factors().enumerate() {
        if i > 0 {
            out.push('*');
        }
        let _ = write!(out, "{}", a);
        write_exponent(&mut out, e);
    }
    if out.is_empty() {
        out.push('1');
    }
    out
}

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if e.is_zero() {
        return f.write_str("0");
    }
    for (i, (m, c)) in e.terms().rev().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        match (i, neg) {
            (0, true) => f.write_str("-")?,
            (0, false) => {}
            (_, true) => f.write_str(" - ")?,
            (_, false) => f.write_str(" + ")?,
        }
        if m.is_one() {
            write!(f, "{}", abs)?;
        } else if abs.is_one() {
            write!(f, "{}", monomial_string(m))?;
        } else {
            write!(f, "{}*{}", abs, monomial_string(m))?;
        }
    }
    Ok(())
}

/// LaTeX rendering used by the CLI.
pub fn to_latex(e: &Expr) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in e.terms().rev().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        out.push_str(match (i, neg) {
            (0, true) => "-",
            (0, false) => "",
            (_, true) => " - ",
            (_, false) => " + ",
        });
        let coeff = if abs.is_integer() {
            abs.to_string()
        } else {
            format!("\\frac{{{}}}{{{}}}", abs.numer(), abs.denom())
        };
        if m.is_one() {
            out.push_str(&coeff);
            continue;
        }
        if !abs.is_one() {
            out.push_str(&coeff);
            out.push(' ');
        }
        let parts: Vec<String> = m
            .factors()
            .map(|(a, e)| {
                let base = latex_atom(a);
                if e.is_one() {
                    base
                } else {
                    format!("{}^{{{}}}", base, e)
                }
            })
            .collect();
        out.push_str(&parts.join(" "));
    }
    out
}

fn latex_atom(a: &Atom) -> String {
    match a {
        Atom::Param(p) => match p.as_str() {
            "mu" | "kappa" | "beta" | "gamma" | "lambda" | "epsilon" | "delta" => format!("\\{}", p),
            "u0" => "u_0".into(),
            _ => p.clone(),
        },
        Atom::Jet(j) if j.order() > 0 => format!("u_{{{}}}", j.suffix()),
        Atom::Exp(arg) => format!("e^{{{}}}", to_latex(arg)),
        Atom::Ln(s) => format!("\\ln {}", s.name()),
        other => other.to_string(),
    }
}
