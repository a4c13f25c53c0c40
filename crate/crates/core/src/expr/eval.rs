use std::collections::HashMap;

use num_traits::ToPrimitive;

use super::{Atom, Expr, ExprError, Rational};

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Floating-point environment for [`Expr::eval`]. Functions are looked up by
/// the whole atom, so `f(u)` and `fp(u)` are independent entries unless a
/// callback is installed.
#[derive(Default, Clone)]
pub struct Env {
    values: HashMap<Atom, f64>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn set(&mut self, atom: Atom, value: f64) -> &mut Self {
        self.values.insert(atom, value);
        self
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> &mut Self {
        self.set(Atom::Param(name.to_string()), value)
    }

    pub fn get(&self, atom: &Atom) -> Option<f64> {
        self.values.get(atom).copied()
    }
}

impl Expr {
    /// Evaluates with base atoms looked up through `lookup`.
    pub fn eval_with(&self, lookup: &dyn Fn(&Atom) -> Option<f64>) -> Result<f64, ExprError> {
        let mut sum = 0.0;
        for (m, c) in self.terms() {
            let mut prod = rational_to_f64(c);
            for (a, e) in m.factors() {
                let v = eval_atom(a, lookup)?;
                let e = rational_to_f64(e);
                prod *= if e == 1.0 {
                    v
                } else if e.fract() == 0.0 {
                    v.powi(e as i32)
                } else {
                    v.powf(e)
                };
            }
            sum += prod;
        }
        if sum.is_nan() {
            return Err(ExprError::Eval(format!("NaN while evaluating {}", self)));
        }
        Ok(sum)
    }

    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        self.eval_with(&|a| env.get(a))
    }
}

fn eval_atom(a: &Atom, lookup: &dyn Fn(&Atom) -> Option<f64>) -> Result<f64, ExprError> {
    if let Some(v) = lookup(a) {
        return Ok(v);
    }
    match a {
        Atom::Exp(arg) => Ok(arg.eval_with(lookup)?.exp()),
        Atom::Ln(s) => {
            let v = eval_atom(&s.atom(), lookup)?;
            if v <= 0.0 {
                return Err(ExprError::Eval(format!("ln of nonpositive {}", v)));
            }
            Ok(v.ln())
        }
        other => Err(ExprError::Eval(format!("no value for `{}`", other))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Var};
    use super::*;

    #[test]
    fn evaluates_with_environment() {
        let e = parse("exp(mu*u)*t^(1/2) + ln(t)").unwrap();
        let mut env = Env::new();
        env.set_param("mu", 2.0).set(Atom::Var(Var::T), 4.0).set(Atom::Jet(Default::default()), 0.5);
        let v = e.eval(&env).unwrap();
        assert!((v - (1f64.exp() * 2.0 + 4f64.ln())).abs() < 1e-12);
    }
}
