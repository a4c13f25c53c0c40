//! Rational functions in the symbolic parameters.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::{Atom, Env, Expr, ExprError, Monomial, Rational};

/// Quotient `num / den` of parameter expressions. The denominator is kept
/// free of monomial factors with a positive leading coefficient.
#[derive(Debug, Clone)]
pub struct RatFunc {
    num: Expr,
    den: Expr,
}

impl PartialEq for RatFunc {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for RatFunc {}

impl From<Expr> for RatFunc {
    fn from(e: Expr) -> Self {
        RatFunc { num: e, den: Expr::one() }
    }
}

impl From<Rational> for RatFunc {
    fn from(q: Rational) -> Self {
        RatFunc::from(Expr::constant(q))
    }
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc::from(Expr::zero())
    }

    pub fn one() -> Self {
        RatFunc::from(Expr::one())
    }

    pub fn int(n: i64) -> Self {
        RatFunc::from(Expr::int(n))
    }

    pub fn new(num: Expr, den: Expr) -> Result<Self, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(RatFunc { num, den }.normalized())
    }

    pub fn num(&self) -> &Expr {
        &self.num
    }

    pub fn den(&self) -> &Expr {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den == self.num
    }

    pub fn as_rational(&self) -> Option<Rational> {
        let n = self.num.as_rational()?;
        let d = self.den.as_rational()?;
        Some(n / d)
    }

    /// The polynomial value when the denominator is trivial.
    pub fn as_expr(&self) -> Option<&Expr> {
        (self.den == Expr::one()).then_some(&self.num)
    }

    pub fn to_expr(&self) -> Result<Expr, ExprError> {
        self.num.try_div(&self.den)
    }

    pub fn params(&self) -> BTreeSet<String> {
        self.num
            .atoms()
            .into_iter()
            .chain(self.den.atoms())
            .filter_map(|a| match a {
                Atom::Param(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    /// Size measure used for pivot selection.
    pub fn complexity(&self) -> usize {
        self.num.len() + self.den.len()
    }

    fn normalized(mut self) -> Self {
        if self.num.is_zero() {
            return RatFunc::zero();
        }
        if let Some((m, c)) = self.den.as_monomial() {
            let num = self.num.mul_monomial(&m.inverse(), &c.recip());
            return RatFunc { num, den: Expr::one() };
        }
        if let Ok(q) = self.num.try_div(&self.den) {
            return RatFunc { num: q, den: Expr::one() };
        }
        // pull the monomial content of the denominator into the numerator
        let content = monomial_content(&self.den);
        if !content.is_one() {
            let inv = content.inverse();
            self.den = self.den.mul_monomial(&inv, &Rational::one());
            self.num = self.num.mul_monomial(&inv, &Rational::one());
        }
        if let Some(g) = univariate_gcd(&self.num, &self.den) {
            if let (Ok(n), Ok(d)) = (self.num.try_div(&g), self.den.try_div(&g)) {
                self.num = n;
                self.den = d;
            }
        }
        let (_, lc) = self.den.leading().expect("nonzero denominator");
        let lc = lc.clone();
        if !lc.is_one() {
            let inv = lc.recip();
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
        if let Some(q) = self.den.as_rational() {
            return RatFunc { num: self.num.scale(&q.recip()), den: Expr::one() };
        }
        self
    }

    pub fn recip(&self) -> Result<RatFunc, ExprError> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc, ExprError> {
        if other.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        RatFunc::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn scale(&self, q: &Rational) -> RatFunc {
        RatFunc { num: self.num.scale(q), den: self.den.clone() }.normalized()
    }

    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        Ok(self.num.eval(env)? / self.den.eval(env)?)
    }

    pub fn subst_param(&self, name: &str, value: &Expr) -> Result<RatFunc, ExprError> {
        RatFunc::new(self.num.subst_param(name, value)?, self.den.subst_param(name, value)?)
    }
}

impl std::ops::Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if self.den == rhs.den {
            return RatFunc { num: &self.num + &rhs.num, den: self.den.clone() }.normalized();
        }
        RatFunc { num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den), den: &self.den * &rhs.den }.normalized()
    }
}

impl std::ops::Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl std::ops::Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        RatFunc { num: &self.num * &rhs.num, den: &self.den * &rhs.den }.normalized()
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Expr::one() {
            write!(f, "{}", self.num)
        } else if self.num.len() == 1 {
            write!(f, "{}/({})", self.num, self.den)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

fn monomial_content(e: &Expr) -> Monomial {
    let mut iter = e.terms();
    let Some((first, _)) = iter.next() else { return Monomial::one() };
    let mut content: Vec<(Atom, Rational)> = first.factors().map(|(a, e)| (a.clone(), e.clone())).collect();
    for (m, _) in iter {
        content.retain_mut(|(a, e)| {
            let other = m.exponent(a);
            if other.is_zero() {
                return false;
            }
            if other < *e {
                *e = other;
            }
            true
        });
    }
    content
        .into_iter()
        .filter(|(_, e)| e.is_positive())
        .fold(Monomial::one(), |acc, (a, e)| acc.mul(&Monomial::atom(a, e)))
}

/// Dense coefficients of a polynomial in a single parameter with
/// nonnegative integer exponents.
fn dense(e: &Expr, var: &Atom) -> Option<Vec<Rational>> {
    let mut coeffs: Vec<Rational> = Vec::new();
    for (m, c) in e.terms() {
        let mut k = 0usize;
        for (a, ex) in m.factors() {
            if a != var || !ex.is_integer() || ex.is_negative() {
                return None;
            }
            k = ex.to_integer().to_usize()?;
        }
        if coeffs.len() <= k {
            coeffs.resize(k + 1, Rational::zero());
        }
        coeffs[k] += c;
    }
    Some(coeffs)
}

fn trim(p: &mut Vec<Rational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn poly_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    trim(&mut r);
    let lb = b.last().unwrap();
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let q = r.last().unwrap() / lb;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] -= &q * c;
        }
        trim(&mut r);
    }
    r
}

/// Gcd of two polynomials in one and the same parameter, if nontrivial.
fn univariate_gcd(a: &Expr, b: &Expr) -> Option<Expr> {
    let atoms: BTreeSet<Atom> = a.atoms().into_iter().chain(b.atoms()).collect();
    if atoms.len() != 1 {
        return None;
    }
    let var = atoms.into_iter().next().unwrap();
    if !matches!(var, Atom::Param(_)) {
        return None;
    }
    let mut p = dense(a, &var)?;
    let mut q = dense(b, &var)?;
    trim(&mut p);
    trim(&mut q);
    while !q.is_empty() {
        let r = poly_rem(&p, &q);
        p = q;
        q = r;
    }
    if p.len() <= 1 {
        return None;
    }
    let x = Expr::atom(var);
    let mut g = Expr::zero();
    let mut xp = Expr::one();
    for c in &p {
        g += &xp.scale(c);
        xp = &xp * &x;
    }
    Some(g)
}
