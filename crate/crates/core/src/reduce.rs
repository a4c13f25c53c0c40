//! Similarity reductions: invariants of affine generators, reduced ODEs and
//! their quadratures, and a small catalog of exact solutions.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::catalog;
use crate::expr::{parse, Arg, Atom, DerivativeIndex, Expr, ExprError, Monomial, Rational, Var};
use crate::field::RatFunc;
use crate::flow::{coordinate, coordinate_index, functional_rank, FlowError, InvariantChart};
use crate::liealg::{commutator, span_coordinates};
use crate::prolong::{PdeProblem, VectorField};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("[{0}, {1}] is not in the span of the pair")]
    NotSubalgebra(String, String),
    #[error("the pair acts with rank {0}; reduction to an ODE needs rank 2")]
    RankDefect(usize),
    #[error("joint invariants [{0}] do not give one independent and one dependent variable")]
    Roles(String),
    #[error("cannot solve {0} = U for u")]
    NotSolvable(String),
    #[error("the substituted equation does not factor through a single ODE: {0}")]
    NoFactor(String),
    #[error("{0} does not match a supported quadrature pattern")]
    Pattern(String),
    #[error("unknown generator `{0}` for this family")]
    UnknownGenerator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Independent,
    Dependent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub expr: Expr,
    pub role: Role,
}

impl Invariant {
    fn new(expr: Expr) -> Self {
        let role = if expr.depends_on(Arg::U) { Role::Dependent } else { Role::Independent };
        Invariant { expr, role }
    }
}

/// Three functionally independent invariants of an affine generator.
pub fn invariants_of(v: &VectorField) -> Result<Vec<Invariant>, ReduceError> {
    let chart = InvariantChart::new(v, &[])?;
    let out: Vec<Expr> = chart.invariants.into_iter().map(|(_, e)| e).collect();
    let r = functional_rank(&out)?;
    if r != 3 {
        return Err(FlowError::Check(format!("invariants of {} have rank {}", v, r)).into());
    }
    Ok(out.into_iter().map(Invariant::new).collect())
}

/// Two invariants shared by a two-dimensional subalgebra.
pub fn joint_invariants(v1: &VectorField, v2: &VectorField) -> Result<Vec<Invariant>, ReduceError> {
    let c = commutator(v1, v2)?;
    let coords = span_coordinates(&[v1.clone(), v2.clone()], &c)
        .ok_or_else(|| ReduceError::NotSubalgebra(v1.to_string(), v2.to_string()))?;
    // the first field has to span an ideal so that the second acts on its invariants
    let (w1, w2) = if coords[1].is_zero() { (v1.clone(), v2.clone()) } else { (c, v1.clone()) };
    let chart = InvariantChart::new(&w1, &[])?;
    let inverse = chart.inverse()?;
    let pivot = coordinate(chart.pivot);
    let mut induced = VectorField::zero();
    for (w, i) in &chart.invariants {
        let action = w2.apply(i)?;
        let action = action.subst_atoms(&|a| coordinate_index(a).map(|j| inverse[j].clone()))?;
        if action.atoms().contains(&pivot) {
            return Err(ReduceError::NotSubalgebra(w1.to_string(), w2.to_string()));
        }
        *induced.component_mut(*w) = action;
    }
    if induced.is_zero() {
        return Err(ReduceError::RankDefect(1));
    }
    let second = InvariantChart::new(&induced, &[chart.pivot])?;
    let mut out = Vec::new();
    for (_, j) in &second.invariants {
        let e = j.subst_atoms(&|a| {
            let k = coordinate_index(a)?;
            chart.invariants.iter().find(|(w, _)| *w == k).map(|(_, i)| i.clone())
        })?;
        for f in [v1, v2] {
            let check = f.apply(&e)?;
            if !check.is_zero() {
                return Err(FlowError::Check(format!("X({}) = {} for X = {}", e, check, f)).into());
            }
        }
        out.push(e);
    }
    let r = functional_rank(&out)?;
    if r != 2 {
        return Err(ReduceError::RankDefect(4 - r));
    }
    Ok(out.into_iter().map(Invariant::new).collect())
}

/// `u` written through the similarity variable `y(t, x, z)` and `U = U(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    pub variable: Expr,
    pub u: Expr,
}

impl Ansatz {
    /// The first independent invariant becomes `y`; the first dependent one
    /// is set equal to `U(y)` and solved for `u`.
    pub fn from_invariants(invs: &[Invariant]) -> Result<Ansatz, ReduceError> {
        let listed = || invs.iter().map(|i| i.expr.to_string()).collect::<Vec<_>>().join(", ");
        let y = invs.iter().find(|i| i.role == Role::Independent).ok_or_else(|| ReduceError::Roles(listed()))?;
        let d = invs.iter().find(|i| i.role == Role::Dependent).ok_or_else(|| ReduceError::Roles(listed()))?;
        let u = Atom::Jet(DerivativeIndex::ZERO);
        let a = d.expr.coefficient_of(&u, &Rational::one());
        let b = &d.expr - &(&a * &Expr::u());
        if a.is_zero() || a.depends_on(Arg::U) || b.depends_on(Arg::U) {
            return Err(ReduceError::NotSolvable(d.expr.to_string()));
        }
        let u = (&Expr::ode(0) - &b).try_div(&a).map_err(|_| ReduceError::NotSolvable(d.expr.to_string()))?;
        Ok(Ansatz { variable: y.expr.clone(), u })
    }

    /// `u(t, x, z)` for a profile `U(y)` given as an expression in `y`.
    pub fn lift(&self, profile: &Expr) -> Result<Expr, ExprError> {
        let p = profile.subst_var(Var::Y, &self.variable)?;
        self.u.subst_atoms(&|a| matches!(a, Atom::Ode(0)).then(|| p.clone()))
    }

    /// A coordinate that `y` determines, with its value in terms of `y` and the rest.
    fn eliminate(&self) -> Option<(Var, Expr)> {
        let y = &self.variable;
        for v in [Var::Z, Var::X, Var::T] {
            let a = y.coefficient_of(&Atom::Var(v), &Rational::one());
            if a.is_zero() || a.depends_on(Arg::Var(v)) {
                continue;
            }
            let rest = y - &(&a * &Expr::var(v));
            if rest.depends_on(Arg::Var(v)) {
                continue;
            }
            if let Ok(value) = (&Expr::var(Var::Y) - &rest).try_div(&a) {
                return Some((v, value));
            }
        }
        None
    }
}

/// The equation with `u` replaced by `sol`. When `y` is given, `sol` may
/// contain `U(y)` and its derivatives, which are differentiated by the chain rule.
pub fn substitute(p: &PdeProblem, sol: &Expr, y: Option<&Expr>) -> Result<Expr, ExprError> {
    let d = |e: &Expr, v: Var| -> Result<Expr, ExprError> {
        let dy = match y {
            Some(y) => y.partial(&Atom::Var(v))?,
            None => Expr::zero(),
        };
        e.derivative_by(&|a| {
            Ok(match a {
                Atom::Var(w) if *w == v => Expr::one(),
                Atom::Ode(k) => &Expr::ode(k + 1) * &dy,
                _ => Expr::zero(),
            })
        })
    };
    let mut values: BTreeMap<DerivativeIndex, Expr> = BTreeMap::new();
    values.insert(DerivativeIndex::ZERO, sol.clone());
    for a in p.lhs.atoms() {
        if let Atom::Jet(j) = a {
            let mut e = sol.clone();
            for v in j.directions() {
                e = d(&e, v)?;
            }
            values.insert(j, e);
        }
    }
    p.lhs.subst_atoms(&|a| match a {
        Atom::Jet(j) => values.get(j).cloned(),
        _ => None,
    })
}

/// Symbolic residual of a candidate solution `u = sol(t, x, z)`.
pub fn pde_residual(p: &PdeProblem, sol: &Expr) -> Result<Expr, ExprError> {
    substitute(p, sol, None)
}

#[derive(Debug, Clone)]
pub struct ReducedOde {
    pub order: u32,
    /// Equation `equation = 0` in `y`, `U` and its derivatives.
    pub equation: Expr,
    pub ansatz: Option<Ansatz>,
    /// Factor with `PDE(ansatz) = multiplier * equation`.
    pub multiplier: Option<Expr>,
    /// Integration constants introduced so far.
    pub constants: Vec<String>,
    pub provenance: String,
    /// Back-substitution checked exactly.
    pub verified: bool,
}

fn ode_order(e: &Expr) -> u32 {
    e.atoms().iter().filter_map(|a| if let Atom::Ode(k) = a { Some(*k) } else { None }).max().unwrap_or(0)
}

impl ReducedOde {
    pub fn new(equation: Expr, provenance: impl Into<String>) -> Self {
        ReducedOde {
            order: ode_order(&equation),
            equation,
            ansatz: None,
            multiplier: None,
            constants: Vec::new(),
            provenance: provenance.into(),
            verified: false,
        }
    }

    /// The equation evaluated on a profile `U(y)`.
    pub fn residual(&self, profile: &Expr) -> Result<Expr, ExprError> {
        let mut derivs = vec![profile.clone()];
        for k in 1..=self.order as usize {
            derivs.push(derivs[k - 1].ode_derivative()?);
        }
        self.equation.subst_atoms(&|a| match a {
            Atom::Ode(k) => derivs.get(*k as usize).cloned(),
            _ => None,
        })
    }

    /// Equality up to a nonzero factor free of `y`, `U` and its derivatives.
    pub fn is_proportional_to(&self, other: &Expr) -> bool {
        proportionality(&self.equation, other).is_some()
    }
}

/// `k` with `c = k * r`, `k` depending on parameters only.
fn proportionality(r: &Expr, c: &Expr) -> Option<RatFunc> {
    let rs = r.split_by_monomial();
    let cs = c.split_by_monomial();
    let (m0, kr) = rs.iter().next()?;
    let kc = cs.get(m0)?;
    (&(c * kr) == &(r * kc)).then(|| RatFunc::new(kc.clone(), kr.clone()).ok()).flatten()
}

/// Rational content removed and the top derivative given a positive leading coefficient.
fn normalize(e: &Expr) -> Expr {
    orient(&e.primitive())
}

fn orient(p: &Expr) -> Expr {
    let n = ode_order(&p);
    let top = Atom::Ode(n);
    let k = p.terms().map(|(m, _)| m.exponent(&top)).max().unwrap_or_else(Rational::zero);
    let lead = p.coefficient_of(&top, &k);
    match lead.leading() {
        Some((_, c)) if c.is_negative() => -p,
        _ => p.clone(),
    }
}

fn is_coordinate_atom(a: &Atom) -> bool {
    let space = |arg: &Arg| matches!(arg, Arg::Var(Var::T | Var::X | Var::Z));
    match a {
        Atom::Var(v) => *v != Var::Y,
        Atom::Ln(s) => space(s),
        Atom::Func(f) => f.args.iter().any(space),
        Atom::Exp(arg) => [Var::T, Var::X, Var::Z].iter().any(|v| arg.depends_on(Arg::Var(*v))),
        _ => false,
    }
}

/// Substitutes the ansatz and factors the result as `multiplier * ODE`.
pub fn reduce_with(p: &PdeProblem, ansatz: Ansatz, provenance: impl Into<String>) -> Result<ReducedOde, ReduceError> {
    let raw = substitute(p, &ansatz.u, Some(&ansatz.variable))?;
    let (w, value) = ansatz
        .eliminate()
        .ok_or_else(|| ReduceError::NoFactor(format!("cannot eliminate a coordinate with y = {}", ansatz.variable)))?;
    let e = raw.subst_var(w, &value)?;
    let mut groups: BTreeMap<Monomial, Expr> = BTreeMap::new();
    for (m, c) in e.terms() {
        let (mut coord, mut rest) = (Monomial::one(), Monomial::one());
        for (a, k) in m.factors() {
            let f = Monomial::atom(a.clone(), k.clone());
            if is_coordinate_atom(a) {
                coord = coord.mul(&f);
            } else {
                rest = rest.mul(&f);
            }
        }
        *groups.entry(coord).or_default() += &Expr::term(rest, c.clone());
    }
    groups.retain(|_, v| !v.is_zero());
    let Some(first) = groups.values().next() else {
        return Err(ReduceError::NoFactor("the ansatz solves the equation identically".into()));
    };
    let equation = normalize(first);
    let mut multiplier = Expr::zero();
    for (m, c) in &groups {
        let k = proportionality(&equation, c).ok_or_else(|| ReduceError::NoFactor(e.to_string()))?;
        multiplier += &k.to_expr()?.mul_monomial(m, &Rational::one());
    }
    let verified = &multiplier * &equation == e;
    let mut ode = ReducedOde::new(equation, provenance);
    ode.ansatz = Some(ansatz);
    ode.multiplier = Some(multiplier);
    ode.verified = verified;
    Ok(ode)
}

pub fn reduce_by_pair(p: &PdeProblem, v1: &VectorField, v2: &VectorField) -> Result<ReducedOde, ReduceError> {
    let invs = joint_invariants(v1, v2)?;
    let ansatz = Ansatz::from_invariants(&invs)?;
    reduce_with(p, ansatz, format!("{{{}, {}}}", v1, v2))
}

/// A combination such as `X1 + beta*X2` of the family's published generators.
pub fn combination(p: &PdeProblem, spec: &str) -> Result<VectorField, ReduceError> {
    let gens = catalog::generators(p)?;
    let e = parse(spec)?;
    let mut out = VectorField::zero();
    let mut rest = e.clone();
    for g in &gens {
        let atom = Atom::Param(g.name.clone());
        let c = e.coefficient_of(&atom, &Rational::one());
        if !c.is_zero() {
            out = out.add(&g.field().scale(&c));
            rest = &rest - &(&c * &Expr::atom(atom));
        }
    }
    if !rest.is_zero() || out.is_zero() {
        return Err(ReduceError::UnknownGenerator(spec.to_string()));
    }
    Ok(out)
}

fn clear_parameter_denominators(e: &Expr) -> Expr {
    let mut lowest: BTreeMap<Atom, Rational> = BTreeMap::new();
    for (m, _) in e.terms() {
        for (a, k) in m.factors() {
            if matches!(a, Atom::Param(_)) && k.is_negative() {
                let entry = lowest.entry(a.clone()).or_insert_with(Rational::zero);
                if k < entry {
                    *entry = k.clone();
                }
            }
        }
    }
    let mut m = Monomial::one();
    for (a, k) in lowest {
        m = m.mul(&Monomial::atom(a, -k));
    }
    e.mul_monomial(&m, &Rational::one())
}

/// Antiderivative with respect to `U^(k)`, other atoms held fixed.
fn integrate_in(e: &Expr, k: u32) -> Option<Expr> {
    if k == 0 {
        return e.integrate(Arg::Reduced).ok();
    }
    let atom = Atom::Ode(k);
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        let p = m.exponent(&atom) + Rational::one();
        if p.is_zero() {
            return None;
        }
        out += &Expr::term(m.mul(&Monomial::atom(atom.clone(), Rational::one())), c / &p);
    }
    Some(out)
}

/// `Phi` with `d Phi / dy = e`, when `e` is an exact derivative.
fn exact_antiderivative(e: &Expr) -> Option<Expr> {
    if e.is_zero() {
        return Some(Expr::zero());
    }
    let n = ode_order(e);
    if n == 0 {
        return None;
    }
    let top = Atom::Ode(n);
    if e.terms().any(|(m, _)| m.exponent(&top) > Rational::one()) {
        return None;
    }
    let a = e.coefficient_of(&top, &Rational::one());
    let phi = integrate_in(&a, n - 1)?;
    let rest = e - &phi.ode_derivative().ok()?;
    if ode_order(&rest) >= n && !rest.is_zero() {
        return None;
    }
    Some(&phi + &exact_antiderivative(&rest)?)
}

fn fresh_constant(e: &Expr, used: &[String]) -> String {
    let params: Vec<String> = e
        .atoms()
        .into_iter()
        .filter_map(|a| if let Atom::Param(p) = a { Some(p) } else { None })
        .collect();
    ["U1", "U0"]
        .iter()
        .map(|s| s.to_string())
        .chain((2..).map(|k| format!("U{}", k)))
        .find(|c| !params.contains(c) && !used.contains(c))
        .expect("unbounded supply of names")
}

/// One quadrature, either of an exact derivative or, for autonomous
/// `a U'' + h(U) = 0`, after multiplying by `U'`.
pub fn first_integral(ode: &ReducedOde) -> Result<ReducedOde, ReduceError> {
    let e = orient(&clear_parameter_denominators(&ode.equation));
    let name = fresh_constant(&e, &ode.constants);
    let constant = Expr::param(&name);
    let (phi, factor) = match exact_antiderivative(&e) {
        Some(phi) => (phi, Expr::one()),
        None => {
            let top = Atom::Ode(2);
            let a = e.coefficient_of(&top, &Rational::one());
            let h = &e - &(&a * &Expr::ode(2));
            let autonomous = ode_order(&e) == 2
                && a.is_param_only()
                && !a.is_zero()
                && ode_order(&h) == 0
                && !h.depends_on(Arg::Var(Var::Y));
            if !autonomous {
                return Err(ReduceError::Pattern(e.to_string()));
            }
            let energy = (&a * &(&Expr::ode(1) * &Expr::ode(1))).scale(&Rational::new(1.into(), 2.into()));
            (&energy + &h.integrate(Arg::Reduced)?, Expr::ode(1))
        }
    };
    let mut out = ReducedOde::new(&phi - &constant, format!("quadrature of {}", ode.provenance));
    out.ansatz = ode.ansatz.clone();
    out.constants = ode.constants.clone();
    out.constants.push(name);
    // differentiating the integral must give back the equation times the integrating factor
    out.verified = out.equation.ode_derivative()? == &e * &factor;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub name: &'static str,
    /// Family tag of the equation it solves.
    pub family: &'static str,
    pub solution: Expr,
    pub note: &'static str,
}

pub fn closed_form_solutions() -> Vec<ClosedForm> {
    let entry = |name, family, s: &str, note| ClosedForm {
        name,
        family,
        solution: parse(s).expect("catalog solutions parse"),
        note,
    };
    vec![
        entry("scaling-family", "qzk", "(z + c*x)/t", "U = c*y solves the {X4, X5} reduction y*U_y - U = 0"),
        entry("scaling", "qzk", "(z + x)/t", "the c = 1 member of the scaling family, as usually quoted"),
        entry("shear", "qzk", "z/t", "the c = 0 member of the scaling family"),
        entry("constant", "qzk", "c0", "constant state"),
        entry("drift", "const", "z - u0*t", "linear profile advected with speed u0"),
        entry("constant", "const", "c0", "constant state"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_fixes_sign_and_content() {
        let e = parse("-1/3*y*U_y + 1/3*U").unwrap();
        assert_eq!(normalize(&e), parse("y*U_y - U").unwrap());
    }

    #[test]
    fn exact_derivative_detection() {
        let e = parse("a*U_yyy + U*U_y").unwrap();
        assert_eq!(exact_antiderivative(&e).unwrap(), parse("a*U_yy + U^2/2").unwrap());
        assert!(exact_antiderivative(&parse("U_yy + U").unwrap()).is_none());
    }

    #[test]
    fn clearing_parameter_denominators() {
        let e = parse("(1 + g^2/b^2)*U_yyy - g*U_y").unwrap();
        assert_eq!(clear_parameter_denominators(&e), parse("(b^2 + g^2)*U_yyy - g*b^2*U_y").unwrap());
    }
}
