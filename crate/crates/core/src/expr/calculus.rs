//! Differentiation, substitution and integration.

use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{Arg, Atom, DerivativeIndex, Expr, ExprError, FuncSym, Monomial, Rational, Var};

impl Expr {
    /// Generic derivation. `rule` gives the derivative of base atoms
    /// (parameters, coordinates, jets, ODE jets); exponentials, logarithms
    /// and opaque functions are handled by the chain rule.
    pub fn derivative_by(
        &self,
        rule: &dyn Fn(&Atom) -> Result<Expr, ExprError>,
    ) -> Result<Expr, ExprError> {
        let mut cache: HashMap<Atom, Expr> = HashMap::new();
        self.derivative_cached(rule, &mut cache)
    }

    fn derivative_cached(
        &self,
        rule: &dyn Fn(&Atom) -> Result<Expr, ExprError>,
        cache: &mut HashMap<Atom, Expr>,
    ) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for (m, c) in self.terms() {
            for (a, e) in m.factors() {
                let da = atom_derivative(a, rule, cache)?;
                if da.is_zero() {
                    continue;
                }
                // d exp(g) = exp(g) dg keeps the factor; otherwise the power rule
                let (rest, factor) = if matches!(a, Atom::Exp(_)) {
                    (m.clone(), c.clone())
                } else {
                    (m.mul(&Monomial::atom(a.clone(), -Rational::one())), c * e)
                };
                out += &da.mul_monomial(&rest, &factor);
            }
        }
        Ok(out)
    }

    /// Total derivative `D_v`. Jets above `cap` raise [`ExprError::JetCapExceeded`].
    pub fn total_derivative(&self, v: Var, cap: u32) -> Result<Expr, ExprError> {
        self.derivative_by(&|a| match a {
            Atom::Var(w) if *w == v => Ok(Expr::one()),
            Atom::Jet(j) => {
                let next = j.plus(v);
                if next.order() > cap {
                    Err(ExprError::JetCapExceeded { order: next.order(), cap })
                } else {
                    Ok(Expr::jet(next))
                }
            }
            _ => Ok(Expr::zero()),
        })
    }

    /// Repeated total derivative along a multi-index.
    pub fn total_derivative_multi(&self, idx: &DerivativeIndex, cap: u32) -> Result<Expr, ExprError> {
        let mut out = self.clone();
        for v in idx.directions() {
            out = out.total_derivative(v, cap)?;
        }
        Ok(out)
    }

    /// Derivative along the reduced variable `y`, with `U^(k)` as ODE jets.
    pub fn ode_derivative(&self) -> Result<Expr, ExprError> {
        self.derivative_by(&|a| match a {
            Atom::Var(Var::Y) => Ok(Expr::one()),
            Atom::Ode(k) => Ok(Expr::ode(k + 1)),
            _ => Ok(Expr::zero()),
        })
    }

    /// Partial derivative treating `atom` as an independent coordinate.
    pub fn partial(&self, atom: &Atom) -> Result<Expr, ExprError> {
        self.derivative_by(&|a| Ok(if a == atom { Expr::one() } else { Expr::zero() }))
    }

    pub fn partial_arg(&self, arg: Arg) -> Result<Expr, ExprError> {
        self.partial(&arg.atom())
    }

    /// Replaces atoms. Base atoms, as well as whole `Exp` or `Func` atoms,
    /// may be mapped; mapped function arguments must stay coordinates.
    pub fn subst_atoms(&self, map: &dyn Fn(&Atom) -> Option<Expr>) -> Result<Expr, ExprError> {
        let mut cache: HashMap<Atom, Option<Expr>> = HashMap::new();
        self.subst_cached(map, &mut cache)
    }

    fn subst_cached(
        &self,
        map: &dyn Fn(&Atom) -> Option<Expr>,
        cache: &mut HashMap<Atom, Option<Expr>>,
    ) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for (m, c) in self.terms() {
            let mut acc = Expr::constant(c.clone());
            let mut kept = Monomial::one();
            for (a, e) in m.factors() {
                let replaced = match cache.get(a) {
                    Some(r) => r.clone(),
                    None => {
                        let r = subst_atom(a, map, cache)?;
                        cache.insert(a.clone(), r.clone());
                        r
                    }
                };
                match replaced {
                    None => kept = kept.mul(&Monomial::atom(a.clone(), e.clone())),
                    Some(v) => acc = &acc * &v.pow_rational(e)?,
                }
            }
            out += &acc.mul_monomial(&kept, &Rational::one());
        }
        Ok(out)
    }

    /// Substitutes a coordinate by an expression.
    pub fn subst_var(&self, v: Var, value: &Expr) -> Result<Expr, ExprError> {
        self.subst_atoms(&|a| (*a == Atom::Var(v)).then(|| value.clone()))
    }

    pub fn subst_param(&self, name: &str, value: &Expr) -> Result<Expr, ExprError> {
        self.subst_atoms(&|a| match a {
            Atom::Param(p) if p == name => Some(value.clone()),
            _ => None,
        })
    }

    /// Eliminates `u_target` and every differential consequence `u_J`,
    /// `J >= target`, using `u_target = value`. Generated jets must stay
    /// within `cap`.
    pub fn substitute_jet(
        &self,
        target: DerivativeIndex,
        value: &Expr,
        cap: u32,
    ) -> Result<Expr, ExprError> {
        let mut sub = JetSubstitution::new(target, value.clone(), cap);
        sub.reduce(self)
    }

    /// Antiderivative with respect to a coordinate, for the integrands that
    /// occur in first integrals of reduced equations.
    pub fn integrate(&self, arg: Arg) -> Result<Expr, ExprError> {
        let x = arg.atom();
        let mut out = Expr::zero();
        for (m, c) in self.terms() {
            out += &integrate_monomial(m, c, arg, &x)?;
        }
        Ok(out)
    }

    /// True when the expression depends on the given coordinate.
    pub fn depends_on(&self, arg: Arg) -> bool {
        let x = arg.atom();
        self.atoms().iter().any(|a| atom_depends(a, &x))
    }
}

fn atom_depends(a: &Atom, x: &Atom) -> bool {
    if a == x {
        return true;
    }
    match a {
        Atom::Func(f) => f.args.iter().any(|g| &g.atom() == x),
        Atom::Ln(s) => &s.atom() == x,
        Atom::Exp(arg) => arg.atoms().iter().any(|b| atom_depends(b, x)),
        _ => false,
    }
}

fn atom_derivative(
    a: &Atom,
    rule: &dyn Fn(&Atom) -> Result<Expr, ExprError>,
    cache: &mut HashMap<Atom, Expr>,
) -> Result<Expr, ExprError> {
    if let Some(d) = cache.get(a) {
        return Ok(d.clone());
    }
    let d = match a {
        Atom::Exp(arg) => arg.derivative_cached(rule, cache)?,
        Atom::Ln(s) => {
            let ds = atom_derivative(&s.atom(), rule, cache)?;
            ds.mul_monomial(&Monomial::atom(s.atom(), -Rational::one()), &Rational::one())
        }
        Atom::Func(f) => {
            let mut total = Expr::zero();
            for (k, g) in f.args.iter().enumerate() {
                let dg = atom_derivative(&g.atom(), rule, cache)?;
                if !dg.is_zero() {
                    total += &(&Expr::func(f.differentiated(k)) * &dg);
                }
            }
            total
        }
        base => rule(base)?,
    };
    cache.insert(a.clone(), d.clone());
    Ok(d)
}

fn subst_atom(
    a: &Atom,
    map: &dyn Fn(&Atom) -> Option<Expr>,
    cache: &mut HashMap<Atom, Option<Expr>>,
) -> Result<Option<Expr>, ExprError> {
    if let Some(v) = map(a) {
        return Ok(Some(v));
    }
    match a {
        Atom::Exp(arg) => {
            let new = arg.subst_cached(map, cache)?;
            Ok((new != **arg).then(|| Expr::exp(new)))
        }
        Atom::Ln(s) => match map(&s.atom()) {
            None => Ok(None),
            Some(v) => Ok(Some(ln_of(&v)?)),
        },
        Atom::Func(f) => {
            let mut changed = false;
            let mut args = Vec::with_capacity(f.args.len());
            for g in &f.args {
                match map(&g.atom()) {
                    None => args.push(*g),
                    Some(v) => {
                        let new = v
                            .as_atom()
                            .and_then(Arg::from_atom)
                            .ok_or_else(|| ExprError::Composition(format!("{} with {} = {}", a, g.name(), v)))?;
                        changed |= new != *g;
                        args.push(new);
                    }
                }
            }
            Ok(changed.then(|| Expr::func(FuncSym { name: f.name.clone(), args, orders: f.orders.clone() })))
        }
        _ => Ok(None),
    }
}

/// `ln` of a unit-coefficient product of coordinates.
fn ln_of(v: &Expr) -> Result<Expr, ExprError> {
    let (m, c) = v
        .as_monomial()
        .ok_or_else(|| ExprError::Unsupported(format!("ln({})", v)))?;
    if !c.is_one() {
        return Err(ExprError::Unsupported(format!("ln({})", v)));
    }
    let mut out = Expr::zero();
    for (a, e) in m.factors() {
        let arg = Arg::from_atom(a).ok_or_else(|| ExprError::Unsupported(format!("ln({})", v)))?;
        out += &Expr::ln(arg).scale(e);
    }
    Ok(out)
}

struct JetSubstitution {
    target: DerivativeIndex,
    value: Expr,
    cap: u32,
    memo: HashMap<DerivativeIndex, Expr>,
    depth: usize,
}

impl JetSubstitution {
    fn new(target: DerivativeIndex, value: Expr, cap: u32) -> Self {
        JetSubstitution { target, value, cap, memo: HashMap::new(), depth: 0 }
    }

    fn reduce(&mut self, e: &Expr) -> Result<Expr, ExprError> {
        let jets: Vec<DerivativeIndex> = e
            .atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Jet(j) if j.contains(&self.target) => Some(j),
                _ => None,
            })
            .collect();
        if jets.is_empty() {
            return Ok(e.clone());
        }
        for j in &jets {
            self.replacement(*j)?;
        }
        let memo = &self.memo;
        e.subst_atoms(&|a| match a {
            Atom::Jet(j) => memo.get(j).cloned(),
            _ => None,
        })
    }

    fn replacement(&mut self, j: DerivativeIndex) -> Result<Expr, ExprError> {
        if let Some(r) = self.memo.get(&j) {
            return Ok(r.clone());
        }
        self.depth += 1;
        if self.depth > 64 {
            return Err(ExprError::Unsupported("jet substitution does not terminate".into()));
        }
        let r = if j == self.target {
            let v = self.value.clone();
            self.reduce(&v)?
        } else {
            let rest = j.minus(&self.target).unwrap();
            let dir = *rest.directions().last().unwrap();
            let lower = DerivativeIndex::new(
                j.t - (dir == Var::T) as u32,
                j.x - (dir == Var::X) as u32,
                j.z - (dir == Var::Z) as u32,
            );
            let base = self.replacement(lower)?;
            let d = base.total_derivative(dir, self.cap)?;
            self.reduce(&d)?
        };
        self.depth -= 1;
        self.memo.insert(j, r.clone());
        Ok(r)
    }
}

fn integrate_monomial(m: &Monomial, c: &Rational, arg: Arg, x: &Atom) -> Result<Expr, ExprError> {
    let unsupported = || ExprError::Unsupported(format!("integral of {} d{}", m, arg.name()));
    let mut rest = Monomial::one();
    let mut power = Rational::zero();
    let mut special: Option<Atom> = None;
    for (a, e) in m.factors() {
        if a == x {
            power = e.clone();
        } else if atom_depends(a, x) {
            if special.is_some() || !e.is_one() {
                return Err(unsupported());
            }
            special = Some(a.clone());
        } else {
            rest = rest.mul(&Monomial::atom(a.clone(), e.clone()));
        }
    }
    let xe = |k: Rational| Expr::term(Monomial::atom(x.clone(), k), Rational::one());
    let body = match special {
        None if power == -Rational::one() => Expr::ln(arg),
        None => xe(&power + Rational::one()).scale(&(&power + Rational::one()).recip()),
        Some(Atom::Func(f)) if power.is_zero() && f.args == vec![arg] => {
            let mut g = f.clone();
            g.orders[0] -= 1;
            Expr::func(g)
        }
        Some(Atom::Ln(_)) if power.is_zero() => &(&xe(Rational::one()) * &Expr::ln(arg)) - &xe(Rational::one()),
        Some(Atom::Exp(a)) if power.is_zero() => {
            // exp(k x + rest) with k free of x
            let k = a.partial(x)?;
            if k.depends_on(arg) || k.is_zero() {
                return Err(unsupported());
            }
            Expr::exp((*a).clone()).try_div(&k)?
        }
        _ => return Err(unsupported()),
    };
    Ok(body.mul_monomial(&rest, c))
}
