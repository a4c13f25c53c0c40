//! Closed-form flows of affine vector fields and the invariants obtained by
//! flowing every point back to a section.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{Arg, Atom, DerivativeIndex, Env, Expr, ExprError, Var};
use crate::field::RatFunc;
use crate::liealg::adjoint::exp_triangular;
use crate::liealg::ExpPoly;
use crate::prolong::VectorField;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("component {0} = {1} is not affine in (t, x, z, u) with constant coefficients")]
    NonAffine(&'static str, String),
    #[error("the linear part of {0} is not triangular; no closed-form flow")]
    Cyclic(String),
    #[error("unsupported field {0}: {1}")]
    Unsupported(String, String),
    #[error("internal check failed: {0}")]
    Check(String),
}

const NAMES: [&str; 4] = ["t", "x", "z", "u"];

pub fn coordinate(i: usize) -> Atom {
    match i {
        0 => Atom::Var(Var::T),
        1 => Atom::Var(Var::X),
        2 => Atom::Var(Var::Z),
        _ => Atom::Jet(DerivativeIndex::ZERO),
    }
}

pub fn coordinate_index(a: &Atom) -> Option<usize> {
    (0..4).find(|&i| coordinate(i) == *a)
}

fn coordinate_arg(i: usize) -> Arg {
    match i {
        0 => Arg::Var(Var::T),
        1 => Arg::Var(Var::X),
        2 => Arg::Var(Var::Z),
        _ => Arg::U,
    }
}

/// Rows of the 5x5 matrix `M` with `v = M (t, x, z, u, 1)^T`; the last row is zero.
fn affine_matrix(v: &VectorField) -> Result<Vec<Vec<RatFunc>>, FlowError> {
    let mut m = vec![vec![RatFunc::zero(); 5]; 5];
    for (i, c) in v.components().into_iter().enumerate() {
        let mut row = vec![Expr::zero(); 5];
        for (vm, coeff) in c.split_by_monomial() {
            let col = if vm.is_one() {
                4
            } else {
                let mut f = vm.factors();
                match (f.next(), f.next()) {
                    (Some((a, e)), None) if e == &crate::expr::Rational::from_integer(1.into()) => {
                        coordinate_index(a).ok_or_else(|| FlowError::NonAffine(NAMES[i], c.to_string()))?
                    }
                    _ => return Err(FlowError::NonAffine(NAMES[i], c.to_string())),
                }
            };
            row[col] += &coeff;
        }
        m[i] = row.into_iter().map(RatFunc::from).collect();
    }
    Ok(m)
}

/// `exp(eps v)` in homogeneous coordinates `(t, x, z, u, 1)`.
#[derive(Debug, Clone)]
pub struct AffineFlow {
    pub field: VectorField,
    generator: Vec<Vec<RatFunc>>,
    matrix: Vec<Vec<ExpPoly>>,
    pub case_splits: Vec<String>,
}

impl AffineFlow {
    pub fn new(v: &VectorField) -> Result<Self, FlowError> {
        let generator = affine_matrix(v)?;
        let (matrix, case_splits) = exp_triangular(&generator).ok_or_else(|| FlowError::Cyclic(v.to_string()))?;
        Ok(AffineFlow { field: v.clone(), generator, matrix, case_splits })
    }

    /// Image of `point` under the flow for time `eps`.
    pub fn image_of(&self, point: &[Expr; 4], eps: &Expr) -> Result<[Expr; 4], ExprError> {
        let mut out: [Expr; 4] = Default::default();
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = self.matrix[j][4].to_expr(eps)?;
            for (k, p) in point.iter().enumerate() {
                let c = self.matrix[j][k].to_expr(eps)?;
                if !c.is_zero() {
                    acc += &(&c * p);
                }
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Images of the coordinate functions.
    pub fn image(&self, eps: &Expr) -> Result<[Expr; 4], ExprError> {
        self.image_of(&std::array::from_fn(|i| Expr::atom(coordinate(i))), eps)
    }

    /// Numeric 5x5 matrix of the flow.
    pub fn eval(&self, eps: f64, env: &Env) -> Result<DMatrix<f64>, ExprError> {
        let mut m = DMatrix::zeros(5, 5);
        for j in 0..5 {
            for k in 0..5 {
                m[(j, k)] = self.matrix[j][k].eval(eps, env)?;
            }
        }
        Ok(m)
    }

    /// Numeric generator matrix, for comparison with `exp` computed by nalgebra.
    pub fn generator(&self, env: &Env) -> Result<DMatrix<f64>, ExprError> {
        let mut m = DMatrix::zeros(5, 5);
        for j in 0..5 {
            for k in 0..5 {
                m[(j, k)] = self.generator[j][k].eval(env)?;
            }
        }
        Ok(m)
    }

    /// True when the images of t, x, z do not involve u.
    pub fn is_projectable(&self) -> bool {
        (0..3).all(|j| self.matrix[j][3].is_zero())
    }

    /// Image of the graph of `u = sol(t, x, z)` under the flow, written
    /// again as a function of (t, x, z).
    pub fn transport(&self, sol: &Expr, eps: &Expr) -> Result<Expr, FlowError> {
        if !self.is_projectable() {
            return Err(FlowError::Unsupported(self.field.to_string(), "the flow of (t, x, z) depends on u".into()));
        }
        let back = self.image(&-eps)?;
        let start = sol.subst_atoms(&|a| coordinate_index(a).filter(|&i| i < 3).map(|i| back[i].clone()))?;
        let point = [back[0].clone(), back[1].clone(), back[2].clone(), start];
        let [_, _, _, u] = self.image_of(&point, eps)?;
        Ok(u)
    }
}

/// Invariants of one field together with the data needed to invert them.
#[derive(Debug, Clone)]
pub struct InvariantChart {
    pub pivot: usize,
    /// `(coordinate, invariant)`; each invariant replaces its coordinate.
    pub invariants: Vec<(usize, Expr)>,
    pub excluded: Vec<usize>,
    flow: AffineFlow,
    section: Expr,
    /// Flow time that carries a point onto the section.
    time_to_section: Expr,
}

impl InvariantChart {
    /// Field acting only on the coordinates not listed in `excluded`.
    pub fn new(v: &VectorField, excluded: &[usize]) -> Result<Self, FlowError> {
        let flow = AffineFlow::new(v)?;
        let m = &flow.generator;
        let active = |i: usize| m[i].iter().any(|c| !c.is_zero());
        for &e in excluded {
            if active(e) || (0..4).any(|i| !m[i][e].is_zero()) {
                return Err(FlowError::Unsupported(v.to_string(), format!("excluded coordinate {} is coupled", NAMES[e])));
            }
        }
        let mut last_reason = String::from("the field vanishes");
        for k in (0..4).filter(|k| !excluded.contains(k) && active(*k)) {
            // the pivot may depend only on itself and on coordinates left fixed by the flow
            if (0..4).any(|l| l != k && !m[k][l].is_zero() && active(l)) {
                last_reason = format!("{} is coupled to moving coordinates", NAMES[k]);
                continue;
            }
            let mut b = m[k][4].to_expr()?;
            for l in (0..4).filter(|&l| l != k) {
                b += &(&m[k][l].to_expr()? * &Expr::atom(coordinate(l)));
            }
            let a = &m[k][k];
            let kx = Expr::atom(coordinate(k));
            let (section, tau) = if a.is_zero() {
                match kx.try_div(&b) {
                    Ok(q) => (Expr::zero(), -q),
                    Err(_) => {
                        last_reason = format!("cannot divide by the {}-component {}", NAMES[k], b);
                        continue;
                    }
                }
            } else if b.is_zero() {
                let inv = a.recip()?.to_expr()?;
                (Expr::one(), -(&inv * &Expr::ln(coordinate_arg(k))))
            } else {
                last_reason = format!("shifted scaling in {}", NAMES[k]);
                continue;
            };
            let image = flow.image(&tau)?;
            let mut invariants = Vec::new();
            for w in (0..4).filter(|w| *w != k && !excluded.contains(w)) {
                let inv = image[w].clone();
                let check = v.apply(&inv)?;
                if !check.is_zero() {
                    return Err(FlowError::Check(format!("X({}) = {} for X = {}", inv, check, v)));
                }
                invariants.push((w, inv));
            }
            return Ok(InvariantChart {
                pivot: k,
                invariants,
                excluded: excluded.to_vec(),
                flow,
                section,
                time_to_section: tau,
            });
        }
        Err(FlowError::Unsupported(v.to_string(), last_reason))
    }

    /// Original coordinates in terms of the pivot and the invariants, where
    /// each invariant is written with the atom of the coordinate it replaces.
    pub fn inverse(&self) -> Result<[Expr; 4], FlowError> {
        let point: [Expr; 4] =
            std::array::from_fn(|i| if i == self.pivot { self.section.clone() } else { Expr::atom(coordinate(i)) });
        let out = self.flow.image_of(&point, &-&self.time_to_section)?;
        if out[self.pivot] != Expr::atom(coordinate(self.pivot)) {
            return Err(FlowError::Check(format!("section inverse gives {} = {}", NAMES[self.pivot], out[self.pivot])));
        }
        Ok(out)
    }
}

/// Rank of the Jacobian of `funcs` with respect to (t, x, z, u) at a fixed
/// generic point.
pub fn functional_rank(funcs: &[Expr]) -> Result<usize, ExprError> {
    let mut env = Env::new();
    for (i, value) in [1.37, 0.61, -0.43, 0.29].into_iter().enumerate() {
        env.set(coordinate(i), value);
    }
    let mut k = 0.0;
    for f in funcs {
        for a in f.atoms() {
            collect_params(&a, &mut env, &mut k);
        }
    }
    let mut jac = DMatrix::zeros(funcs.len(), 4);
    for (r, f) in funcs.iter().enumerate() {
        for c in 0..4 {
            jac[(r, c)] = f.partial(&coordinate(c))?.eval(&env)?;
        }
    }
    Ok(jac.rank(1e-9))
}

fn collect_params(a: &Atom, env: &mut Env, k: &mut f64) {
    match a {
        Atom::Param(p) if env.get(a).is_none() => {
            *k += 1.0;
            env.set_param(p, 0.7 + 0.31 * *k);
        }
        Atom::Exp(arg) => {
            for b in arg.atoms() {
                collect_params(&b, env, k);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn field(c: [&str; 4]) -> VectorField {
        VectorField::parse(c).unwrap()
    }

    #[test]
    fn shear_flow() {
        let f = AffineFlow::new(&field(["0", "0", "t", "1"])).unwrap();
        let img = f.image(&Expr::param("eps")).unwrap();
        assert_eq!(img[2], parse("z + eps*t").unwrap());
        assert_eq!(img[3], parse("u + eps").unwrap());
    }

    #[test]
    fn scaling_flow_matches_matrix_exponential() {
        let f = AffineFlow::new(&field(["3*t", "x", "z + 2*t", "-2*u"])).unwrap();
        let env = Env::new();
        let closed = f.eval(0.3, &env).unwrap();
        let numeric = (f.generator(&env).unwrap() * 0.3).exp();
        assert!((closed - numeric).norm() < 1e-12);
    }

    #[test]
    fn non_affine_rejected() {
        assert!(matches!(AffineFlow::new(&field(["t^2", "0", "0", "0"])), Err(FlowError::NonAffine(..))));
    }

    #[test]
    fn chart_inverse_round_trip() {
        let v = field(["3*t", "x", "z", "-2*u"]);
        let chart = InvariantChart::new(&v, &[]).unwrap();
        let inv = chart.inverse().unwrap();
        for (w, i) in &chart.invariants {
            let back = i.subst_atoms(&|a| coordinate_index(a).map(|j| inv[j].clone())).unwrap();
            assert_eq!(back, Expr::atom(coordinate(*w)));
        }
    }
}
