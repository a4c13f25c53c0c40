//! Vector fields, prolongation and the infinitesimal symmetry condition.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{parse, Arg, Atom, DerivativeIndex, Expr, ExprError, FuncSym, Monomial, Var};
use crate::field::RatFunc;

/// Point-symmetry generator `xi_t d_t + xi_x d_x + xi_z d_z + eta d_u`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VectorField {
    pub xi_t: Expr,
    pub xi_x: Expr,
    pub xi_z: Expr,
    pub eta: Expr,
}

pub const COMPONENT_NAMES: [&str; 4] = ["xi_t", "xi_x", "xi_z", "eta"];

impl VectorField {
    pub fn new(xi_t: Expr, xi_x: Expr, xi_z: Expr, eta: Expr) -> Self {
        VectorField { xi_t, xi_x, xi_z, eta }
    }

    pub fn parse(components: [&str; 4]) -> Result<Self, ExprError> {
        Ok(VectorField::new(
            parse(components[0])?,
            parse(components[1])?,
            parse(components[2])?,
            parse(components[3])?,
        ))
    }

    pub fn zero() -> Self {
        VectorField::default()
    }

    /// Field with a single nonzero component.
    pub fn unit(component: usize, value: Expr) -> Self {
        let mut v = VectorField::zero();
        *v.component_mut(component) = value;
        v
    }

    pub fn components(&self) -> [&Expr; 4] {
        [&self.xi_t, &self.xi_x, &self.xi_z, &self.eta]
    }

    pub fn component(&self, i: usize) -> &Expr {
        self.components()[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut Expr {
        match i {
            0 => &mut self.xi_t,
            1 => &mut self.xi_x,
            2 => &mut self.xi_z,
            3 => &mut self.eta,
            _ => panic!("component index {} out of range", i),
        }
    }

    pub fn xi(&self, v: Var) -> &Expr {
        match v {
            Var::T => &self.xi_t,
            Var::X => &self.xi_x,
            Var::Z => &self.xi_z,
            Var::Y => panic!("no y component"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|c| c.is_zero())
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> VectorField {
        VectorField::new(f(&self.xi_t), f(&self.xi_x), f(&self.xi_z), f(&self.eta))
    }

    pub fn try_map(&self, mut f: impl FnMut(&Expr) -> Result<Expr, ExprError>) -> Result<VectorField, ExprError> {
        Ok(VectorField::new(f(&self.xi_t)?, f(&self.xi_x)?, f(&self.xi_z)?, f(&self.eta)?))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::new(
            &self.xi_t + &other.xi_t,
            &self.xi_x + &other.xi_x,
            &self.xi_z + &other.xi_z,
            &self.eta + &other.eta,
        )
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        self.map(|e| c * e)
    }

    /// `X(f)` for a function of (t, x, z, u).
    pub fn apply(&self, f: &Expr) -> Result<Expr, ExprError> {
        f.derivative_by(&|a| {
            Ok(match a {
                Atom::Var(Var::T) => self.xi_t.clone(),
                Atom::Var(Var::X) => self.xi_x.clone(),
                Atom::Var(Var::Z) => self.xi_z.clone(),
                Atom::Jet(j) if j.order() == 0 => self.eta.clone(),
                Atom::Jet(_) => return Err(ExprError::Unsupported("X(f) with f depending on derivatives".into())),
                _ => Expr::zero(),
            })
        })
    }

    /// Point-symmetry shape: no jets of positive order.
    pub fn is_point(&self) -> bool {
        self.components().iter().all(|c| c.max_jet_order() == 0)
    }

    pub fn to_strings(&self) -> [String; 4] {
        [self.xi_t.to_string(), self.xi_x.to_string(), self.xi_z.to_string(), self.eta.to_string()]
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, d) in self.components().iter().zip(["∂t", "∂x", "∂z", "∂u"]) {
            if c.is_zero() {
                continue;
            }
            let (neg, body) = match c.as_monomial() {
                Some((_, coeff)) if coeff.is_negative() => (true, -(*c).clone()),
                _ => (false, (*c).clone()),
            };
            let text = if body.len() > 1 {
                format!("({})", body)
            } else if body == Expr::one() {
                String::new()
            } else {
                format!("{}*", body)
            };
            match (first, neg) {
                (true, true) => write!(f, "-{}{}", text, d)?,
                (true, false) => write!(f, "{}{}", text, d)?,
                (false, true) => write!(f, " - {}{}", text, d)?,
                (false, false) => write!(f, " + {}{}", text, d)?,
            }
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Nonlinearity `f(u)` of the generalized equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FCandidate {
    Arbitrary,
    Const { u0: Expr },
    Linear,
    Power { mu: Expr, u0: Expr },
    Quadratic { kappa: Expr, u0: Expr },
    Exp { mu: Expr, u0: Expr },
    Log { u0: Expr },
}

impl FCandidate {
    pub fn tag(&self) -> &'static str {
        match self {
            FCandidate::Arbitrary => "arbitrary",
            FCandidate::Const { .. } => "const",
            FCandidate::Linear => "linear",
            FCandidate::Power { .. } => "power",
            FCandidate::Quadratic { .. } => "quadratic",
            FCandidate::Exp { .. } => "exp",
            FCandidate::Log { .. } => "log",
        }
    }

    /// Symbolic-parameter version of each family.
    pub fn symbolic(tag: &str) -> Option<FCandidate> {
        let p = Expr::param;
        Some(match tag {
            "arbitrary" => FCandidate::Arbitrary,
            "const" => FCandidate::Const { u0: p("u0") },
            "linear" => FCandidate::Linear,
            "power" => FCandidate::Power { mu: p("mu"), u0: p("u0") },
            "quadratic" => FCandidate::Quadratic { kappa: p("kappa"), u0: p("u0") },
            "exp" => FCandidate::Exp { mu: p("mu"), u0: p("u0") },
            "log" => FCandidate::Log { u0: p("u0") },
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        let nonzero = |name: &str, e: &Expr| {
            if e.is_zero() {
                Err(format!("{} must be nonzero for the {} family", name, self.tag()))
            } else {
                Ok(())
            }
        };
        match self {
            FCandidate::Power { mu, .. } | FCandidate::Exp { mu, .. } => nonzero("mu", mu),
            FCandidate::Quadratic { kappa, .. } => nonzero("kappa", kappa),
            _ => Ok(()),
        }
    }

    /// `f(u)` as an expression in `arg`.
    pub fn f(&self, arg: Arg) -> Expr {
        let u = Expr::atom(arg.atom());
        match self {
            FCandidate::Arbitrary => Expr::func(FuncSym::unary("f", arg, 0)),
            FCandidate::Const { u0 } => u0.clone(),
            FCandidate::Linear => u,
            FCandidate::Power { mu, u0 } => &power_of(arg, mu) + u0,
            FCandidate::Quadratic { kappa, u0 } => &(&u + &(kappa * &(&u * &u))) + u0,
            FCandidate::Exp { mu, u0 } => &Expr::exp(mu * &u) + u0,
            FCandidate::Log { u0 } => &Expr::ln(arg) + u0,
        }
    }

    /// Antiderivative `F` with `F' = f`.
    pub fn antiderivative(&self, arg: Arg) -> Result<Expr, ExprError> {
        self.f(arg).integrate(arg)
    }
}

/// `base^e`, through `exp(e ln base)` when `e` is not rational.
pub fn power_of(base: Arg, e: &Expr) -> Expr {
    match e.as_rational() {
        Some(q) => Expr::atom(base.atom()).pow_rational(&q).expect("coordinate powers are always defined"),
        None => Expr::exp(e * &Expr::ln(base)),
    }
}

/// Coefficient profiles `lambda(t)`, `epsilon(t)` of the time-varying equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Profile {
    Arbitrary,
    Power { p: Expr, q: Expr },
    Exponential { p: Expr, q: Expr },
}

impl Profile {
    pub fn tag(&self) -> &'static str {
        match self {
            Profile::Arbitrary => "tv-arbitrary",
            Profile::Power { .. } => "tv-power",
            Profile::Exponential { .. } => "tv-exp",
        }
    }

    pub fn lambda(&self) -> Expr {
        match self {
            Profile::Arbitrary => Expr::func(FuncSym::unary("lam", Arg::Var(Var::T), 0)),
            Profile::Power { p, .. } => power_of(Arg::Var(Var::T), p),
            Profile::Exponential { p, .. } => Expr::exp(p * &Expr::var(Var::T)),
        }
    }

    pub fn epsilon(&self) -> Expr {
        match self {
            Profile::Arbitrary => Expr::func(FuncSym::unary("eps", Arg::Var(Var::T), 0)),
            Profile::Power { q, .. } => power_of(Arg::Var(Var::T), q),
            Profile::Exponential { q, .. } => Expr::exp(q * &Expr::var(Var::T)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Qzk,
    Generalized(FCandidate),
    TimeVarying(Profile),
    Custom,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Qzk => "qzk",
            Family::Generalized(f) => f.tag(),
            Family::TimeVarying(p) => p.tag(),
            Family::Custom => "custom",
        }
    }
}

/// Equation `lhs = 0`, solved as `u_t = rhs` for on-shell substitution.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub family: Family,
    pub lhs: Expr,
    pub rhs: Option<Expr>,
    pub order: u32,
}

impl PdeProblem {
    fn from_terms(family: Family, f: Expr, lambda: Expr, epsilon: Expr) -> Self {
        let j = |t, x, z| Expr::jet(DerivativeIndex::new(t, x, z));
        let rest = &(&(&f * &j(0, 0, 1)) + &(&lambda * &j(0, 0, 3))) + &(&epsilon * &j(0, 2, 1));
        PdeProblem { family, lhs: &j(1, 0, 0) + &rest, rhs: Some(-rest), order: 3 }
    }

    pub fn qzk() -> Self {
        PdeProblem::from_terms(Family::Qzk, Expr::u(), Expr::one(), Expr::one())
    }

    pub fn generalized(f: FCandidate) -> Self {
        let fu = f.f(Arg::U);
        PdeProblem::from_terms(Family::Generalized(f), fu, Expr::one(), Expr::one())
    }

    pub fn time_varying(profile: Profile) -> Self {
        let (l, e) = (profile.lambda(), profile.epsilon());
        PdeProblem::from_terms(Family::TimeVarying(profile), Expr::u(), l, e)
    }

    /// Arbitrary equation; it must be linear in `u_t` with unit coefficient to
    /// admit on-shell substitution.
    pub fn custom(lhs: Expr) -> Self {
        let ut = Atom::Jet(DerivativeIndex::unit(Var::T));
        let one = num_rational::BigRational::from_integer(1.into());
        let coeff = lhs.coefficient_of(&ut, &one);
        let rest = lhs.coefficient_of(&ut, &num_rational::BigRational::from_integer(0.into()));
        let order = lhs.max_jet_order();
        let solvable = coeff == Expr::one()
            && !rest.atoms().iter().any(|a| matches!(a, Atom::Jet(j) if j.t > 0));
        PdeProblem { family: Family::Custom, rhs: solvable.then(|| -rest), lhs, order }
    }

    /// True when the equation is linear in `u` and its derivatives.
    pub fn is_linear(&self) -> bool {
        self.lhs.terms().all(|(m, _)| {
            let mut deg = num_rational::BigRational::from_integer(0.into());
            for (a, e) in m.factors() {
                match a {
                    Atom::Jet(_) => deg += e,
                    Atom::Func(f) if f.args.contains(&Arg::U) => return false,
                    Atom::Ln(Arg::U) => return false,
                    Atom::Exp(arg) if arg.depends_on(Arg::U) => return false,
                    _ => {}
                }
            }
            deg <= num_rational::BigRational::from_integer(1.into())
        })
    }

    /// Jet cap used while eliminating `u_t` and its consequences.
    pub fn working_cap(&self) -> u32 {
        (2 * self.order).saturating_sub(1).max(self.order)
    }

    pub fn on_shell(&self, e: &Expr) -> Result<Expr, ExprError> {
        match &self.rhs {
            Some(rhs) => e.substitute_jet(DerivativeIndex::unit(Var::T), rhs, self.working_cap()),
            None => Ok(e.clone()),
        }
    }
}

/// Prolongation coefficients `eta^J`, memoized per field.
pub struct Prolongation<'a> {
    field: &'a VectorField,
    cap: u32,
    memo: HashMap<DerivativeIndex, Expr>,
    dxi: HashMap<(usize, Var), Expr>,
}

impl<'a> Prolongation<'a> {
    pub fn new(field: &'a VectorField, cap: u32) -> Self {
        Prolongation { field, cap, memo: HashMap::new(), dxi: HashMap::new() }
    }

    fn total_xi(&mut self, k: usize, v: Var) -> Result<Expr, ExprError> {
        if let Some(e) = self.dxi.get(&(k, v)) {
            return Ok(e.clone());
        }
        let d = self.field.component(k).total_derivative(v, self.cap)?;
        self.dxi.insert((k, v), d.clone());
        Ok(d)
    }

    /// `eta^J` via `eta^{J+i} = D_i eta^J - sum_k u_{J+k} D_i xi^k`.
    pub fn coefficient(&mut self, j: DerivativeIndex) -> Result<Expr, ExprError> {
        if j.order() == 0 {
            return Ok(self.field.eta.clone());
        }
        if j.order() > self.cap {
            return Err(ExprError::JetCapExceeded { order: j.order(), cap: self.cap });
        }
        if let Some(e) = self.memo.get(&j) {
            return Ok(e.clone());
        }
        let i = *j.directions().last().unwrap();
        let parent = DerivativeIndex::new(
            j.t - (i == Var::T) as u32,
            j.x - (i == Var::X) as u32,
            j.z - (i == Var::Z) as u32,
        );
        let mut out = self.coefficient(parent)?.total_derivative(i, self.cap)?;
        for (k, v) in Var::SPACE_TIME.iter().enumerate() {
            let dxi = self.total_xi(k, i)?;
            if !dxi.is_zero() {
                out -= &(&Expr::jet(parent.plus(*v)) * &dxi);
            }
        }
        self.memo.insert(j, out.clone());
        Ok(out)
    }
}

pub fn prolong_coefficient(v: &VectorField, j: DerivativeIndex, cap: u32) -> Result<Expr, ExprError> {
    Prolongation::new(v, cap).coefficient(j)
}

/// `X^[n](lhs)` before restriction to solutions.
pub fn prolonged_action(v: &VectorField, lhs: &Expr, cap: u32) -> Result<Expr, ExprError> {
    let mut pr = Prolongation::new(v, cap);
    let cell = std::cell::RefCell::new(&mut pr);
    lhs.derivative_by(&|a| {
        Ok(match a {
            Atom::Var(Var::Y) => Expr::zero(),
            Atom::Var(w) => v.xi(*w).clone(),
            Atom::Jet(j) => cell.borrow_mut().coefficient(*j)?,
            _ => Expr::zero(),
        })
    })
}

/// Residual of the symmetry condition on the solution manifold; zero iff
/// `v` is a Lie point symmetry.
pub fn symmetry_defect(v: &VectorField, p: &PdeProblem) -> Result<Expr, ExprError> {
    let raw = prolonged_action(v, &p.lhs, p.order.max(1))?;
    p.on_shell(&raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzProfile {
    #[default]
    Polynomial,
    Power,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub degree: u32,
    #[serde(default)]
    pub profile: AnsatzProfile,
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        AnsatzSpec { degree: 3, profile: AnsatzProfile::Polynomial }
    }
}

impl AnsatzSpec {
    pub fn polynomial(degree: u32) -> Self {
        AnsatzSpec { degree, profile: AnsatzProfile::Polynomial }
    }

    /// Ansatz matching a problem: profile-restricted for power and
    /// exponential time-varying coefficients.
    pub fn for_problem(p: &PdeProblem, degree: u32) -> Self {
        let profile = match &p.family {
            Family::TimeVarying(Profile::Power { .. }) => AnsatzProfile::Power,
            Family::TimeVarying(Profile::Exponential { .. }) => AnsatzProfile::Exponential,
            _ => AnsatzProfile::Polynomial,
        };
        AnsatzSpec { degree, profile }
    }

    /// Basis functions per component.
    pub fn basis(&self) -> Vec<(usize, Expr)> {
        let mut out = Vec::new();
        for c in 0..4 {
            let monos = match (self.profile, c) {
                (AnsatzProfile::Polynomial, _) => monomials(self.degree),
                (_, 0) => vec![Expr::one(), Expr::var(Var::T)],
                _ => monomials(2),
            };
            out.extend(monos.into_iter().map(|m| (c, m)));
        }
        out
    }
}

/// Monomials in (t, x, z, u) of total degree at most `d`, graded.
fn monomials(d: u32) -> Vec<Expr> {
    let gens = [Expr::var(Var::T), Expr::var(Var::X), Expr::var(Var::Z), Expr::u()];
    let mut out = Vec::new();
    for total in 0..=d {
        for a in (0..=total).rev() {
            for b in (0..=total - a).rev() {
                for c in (0..=total - a - b).rev() {
                    let e = total - a - b - c;
                    let mut m = Expr::one();
                    for (g, k) in gens.iter().zip([a, b, c, e]) {
                        m = &m * &g.pow(k as i64).unwrap();
                    }
                    out.push(m);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Unknown {
    pub component: usize,
    pub basis: Expr,
}

impl Unknown {
    pub fn label(&self) -> String {
        format!("{}[{}]", COMPONENT_NAMES[self.component], self.basis)
    }

    /// True for `eta` entries free of `u`.
    pub fn is_source_term(&self) -> bool {
        self.component == 3 && !self.basis.depends_on(Arg::U)
    }

    pub fn field(&self) -> VectorField {
        VectorField::unit(self.component, self.basis.clone())
    }
}

#[derive(Debug, Clone)]
pub struct Relation {
    /// The monomial in coordinates, jets and opaque symbols whose coefficient vanishes.
    pub monomial: Monomial,
    pub coeffs: Vec<(usize, RatFunc)>,
}

#[derive(Debug, Clone)]
pub struct DeterminingSystem {
    pub unknowns: Vec<Unknown>,
    pub relations: Vec<Relation>,
    defects: Vec<Expr>,
}

impl DeterminingSystem {
    /// Field from a coefficient vector over the unknowns.
    pub fn field_from(&self, coeffs: &[RatFunc]) -> Result<VectorField, ExprError> {
        let mut v = VectorField::zero();
        for (u, c) in self.unknowns.iter().zip(coeffs) {
            if c.is_zero() {
                continue;
            }
            let term = &c.to_expr()? * &u.basis;
            *v.component_mut(u.component) += &term;
        }
        Ok(v)
    }

    /// Sum over relations of coefficient times monomial for one unknown.
    pub fn reassemble(&self, k: usize) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for r in &self.relations {
            for (j, c) in &r.coeffs {
                if *j == k {
                    out += &(&c.to_expr()? * &Expr::term(r.monomial.clone(), num_traits::One::one()));
                }
            }
        }
        Ok(out)
    }

    pub fn defect(&self, k: usize) -> &Expr {
        &self.defects[k]
    }
}

pub fn determining_equations(p: &PdeProblem, ansatz: &AnsatzSpec) -> Result<DeterminingSystem, ExprError> {
    let unknowns: Vec<Unknown> = ansatz
        .basis()
        .into_iter()
        .map(|(component, basis)| Unknown { component, basis })
        .collect();
    if p.lhs.is_zero() {
        return Ok(DeterminingSystem { unknowns, relations: Vec::new(), defects: Vec::new() });
    }
    let defects: Vec<Expr> = unknowns
        .par_iter()
        .map(|u| symmetry_defect(&u.field(), p))
        .collect::<Result<_, _>>()?;
    let mut rows: BTreeMap<Monomial, Vec<(usize, RatFunc)>> = BTreeMap::new();
    for (k, d) in defects.iter().enumerate() {
        for (m, c) in d.split_by_monomial() {
            rows.entry(m).or_default().push((k, RatFunc::from(c)));
        }
    }
    let relations = rows.into_iter().map(|(monomial, coeffs)| Relation { monomial, coeffs }).collect();
    Ok(DeterminingSystem { unknowns, relations, defects })
}
