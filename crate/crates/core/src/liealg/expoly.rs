//! Exponential polynomials `sum c eps^k exp(r eps)` with coefficients and
//! rates in the parameter field.

use std::fmt;

use num_bigint::BigInt;

use crate::expr::{Env, Expr, ExprError, Rational};
use crate::field::RatFunc;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub rate: RatFunc,
    pub power: u32,
    pub coeff: RatFunc,
}

#[derive(Debug, Clone, Default)]
pub struct ExpPoly {
    terms: Vec<ExpTerm>,
}

impl PartialEq for ExpPoly {
    fn eq(&self, other: &Self) -> bool {
        self.add(&other.scale(&RatFunc::int(-1))).is_zero()
    }
}

impl ExpPoly {
    pub fn zero() -> Self {
        ExpPoly::default()
    }

    pub fn constant(c: RatFunc) -> Self {
        ExpPoly::term(RatFunc::zero(), 0, c)
    }

    pub fn term(rate: RatFunc, power: u32, coeff: RatFunc) -> Self {
        let mut p = ExpPoly::zero();
        p.push(ExpTerm { rate, power, coeff });
        p
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, t: ExpTerm) {
        if t.coeff.is_zero() {
            return;
        }
        if let Some(i) = self.terms.iter().position(|s| s.power == t.power && s.rate == t.rate) {
            let c = &self.terms[i].coeff + &t.coeff;
            if c.is_zero() {
                self.terms.remove(i);
            } else {
                self.terms[i].coeff = c;
            }
        } else {
            self.terms.push(t);
        }
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone());
        }
        out
    }

    pub fn scale(&self, c: &RatFunc) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for t in &self.terms {
            out.push(ExpTerm { coeff: &t.coeff * c, ..t.clone() });
        }
        out
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for a in &self.terms {
            for b in &other.terms {
                out.push(ExpTerm { rate: &a.rate + &b.rate, power: a.power + b.power, coeff: &a.coeff * &b.coeff });
            }
        }
        out
    }

    /// Value at `eps = 0`.
    pub fn at_zero(&self) -> RatFunc {
        let mut out = RatFunc::zero();
        for t in self.terms.iter().filter(|t| t.power == 0) {
            out = &out + &t.coeff;
        }
        out
    }

    /// Replaces `eps` by `-eps`.
    pub fn reflect(&self) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for t in &self.terms {
            let c = if t.power % 2 == 1 { -&t.coeff } else { t.coeff.clone() };
            out.push(ExpTerm { rate: -&t.rate, power: t.power, coeff: c });
        }
        out
    }

    pub fn derivative(&self) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for t in &self.terms {
            if !t.rate.is_zero() {
                out.push(ExpTerm { coeff: &t.coeff * &t.rate, ..t.clone() });
            }
            if t.power > 0 {
                out.push(ExpTerm { rate: t.rate.clone(), power: t.power - 1, coeff: t.coeff.scale(&int(t.power as i64)) });
            }
        }
        out
    }

    pub fn eval(&self, eps: f64, env: &Env) -> Result<f64, ExprError> {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.coeff.eval(env)? * eps.powi(t.power as i32) * (t.rate.eval(env)? * eps).exp();
        }
        Ok(s)
    }

    /// Symbolic form with `eps` standing for the group parameter.
    pub fn to_expr(&self, eps: &Expr) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for t in &self.terms {
            let mut e = t.coeff.to_expr()?;
            if t.power > 0 {
                e = &e * &eps.pow(t.power as i64)?;
            }
            if !t.rate.is_zero() {
                e = &e * &Expr::exp(&t.rate.to_expr()? * eps);
            }
            out += &e;
        }
        Ok(out)
    }
}

pub(crate) fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Solution of `y' = lambda y + g` with `y(0) = y0`. Rate differences that
/// are not constants are assumed nonzero and reported in `splits`.
pub(crate) fn solve_linear(lambda: &RatFunc, g: &ExpPoly, y0: &RatFunc, splits: &mut Vec<String>) -> ExpPoly {
    let mut particular = ExpPoly::zero();
    for t in g.terms() {
        let d = &t.rate - lambda;
        if d.is_zero() {
            let c = t.coeff.scale(&Rational::new(1.into(), BigInt::from(t.power + 1)));
            particular.push(ExpTerm { rate: t.rate.clone(), power: t.power + 1, coeff: c });
            continue;
        }
        if d.as_rational().is_none() {
            for c in crate::detsolve::nullspace::zero_conditions(d.num()) {
                let cond = format!("resonance when {}", c);
                if !splits.contains(&cond) {
                    splits.push(cond);
                }
            }
        }
        let inv = d.recip().expect("nonzero rate difference");
        // sum_k c (-1)^k m!/(m-k)! eps^(m-k) / d^(k+1)
        let m = t.power;
        let mut falling = int(1);
        let mut dpow = inv.clone();
        for k in 0..=m {
            let sign = if k % 2 == 0 { int(1) } else { int(-1) };
            let coeff = (&t.coeff * &dpow).scale(&(&falling * &sign));
            particular.push(ExpTerm { rate: t.rate.clone(), power: m - k, coeff });
            falling *= int((m - k) as i64);
            dpow = &dpow * &inv;
        }
    }
    let c = y0 - &particular.at_zero();
    particular.add(&ExpPoly::term(lambda.clone(), 0, c))
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_expr(&Expr::param("eps")) {
            Ok(e) => write!(f, "{}", e),
            Err(_) => {
                let parts: Vec<String> = self
                    .terms
                    .iter()
                    .map(|t| format!("({})*eps^{}*exp(({})*eps)", t.coeff, t.power, t.rate))
                    .collect();
                if parts.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", parts.join(" + "))
                }
            }
        }
    }
}
