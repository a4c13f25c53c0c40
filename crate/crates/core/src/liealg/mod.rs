//! Finite-dimensional Lie algebras of vector fields.

pub(crate) mod adjoint;
mod expoly;
mod identify;
pub mod optimal;
pub mod tables;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::detsolve::nullspace::{null_space, rank, rref};
use crate::expr::{Env, Expr, ExprError, Monomial};
use crate::field::RatFunc;
use crate::prolong::VectorField;

pub use adjoint::{adjoint, adjoint_numeric, AdjointMatrix, AdjointResult};
pub use expoly::{ExpPoly, ExpTerm};
pub use identify::{identify_algebra, AlgebraId, Fingerprint};


#[derive(Debug, Error)]
pub enum LieError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("[{0}, {1}] = {2} is not in the span of the basis")]
    NotClosed(String, String, String),
    #[error("commutator of {0} and {1} is not a point vector field")]
    NotPoint(String, String),
    #[error("basis elements are linearly dependent")]
    Dependent,
    #[error("expected basis [{0}], found [{1}]")]
    BasisMismatch(String, String),
}

/// `[v, w]` with components `v(w^a) - w(v^a)`.
pub fn commutator(v: &VectorField, w: &VectorField) -> Result<VectorField, ExprError> {
    let mut out = VectorField::zero();
    for a in 0..4 {
        *out.component_mut(a) = &v.apply(w.component(a))? - &w.apply(v.component(a))?;
    }
    Ok(out)
}

/// Basis with structure constants `[X_j, X_k] = c[j][k][i] X_i`.
#[derive(Debug, Clone)]
pub struct LieAlgebra {
    pub names: Vec<String>,
    pub basis: Vec<VectorField>,
    structure: Vec<Vec<Vec<RatFunc>>>,
}

type Key = (usize, Monomial);

fn field_coordinates(v: &VectorField) -> BTreeMap<Key, RatFunc> {
    let mut out = BTreeMap::new();
    for c in 0..4 {
        for (m, coeff) in v.component(c).split_by_monomial() {
            out.insert((c, m), RatFunc::from(coeff));
        }
    }
    out
}

/// Coefficients of `target` in the span of `basis`, if it lies there.
pub fn span_coordinates(basis: &[VectorField], target: &VectorField) -> Option<Vec<RatFunc>> {
    let n = basis.len();
    let coords: Vec<BTreeMap<Key, RatFunc>> = basis.iter().map(field_coordinates).collect();
    let t = field_coordinates(target);
    let mut keys: Vec<&Key> = coords.iter().flat_map(|c| c.keys()).chain(t.keys()).collect();
    keys.sort();
    keys.dedup();
    let rows = keys.iter().map(|k| {
        let mut row: Vec<(usize, RatFunc)> = coords
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.get(*k).map(|v| (j, v.clone())))
            .collect();
        if let Some(v) = t.get(*k) {
            row.push((n, v.clone()));
        }
        row
    });
    let ech = rref(rows, n + 1);
    let mut out = vec![RatFunc::zero(); n];
    for (p, row) in &ech.rows {
        if *p == n {
            return None;
        }
        if let Some(v) = row.get(&n) {
            out[*p] = v.clone();
        }
    }
    Some(out)
}

impl LieAlgebra {
    pub fn from_fields(names: Vec<String>, basis: Vec<VectorField>) -> Result<Self, LieError> {
        let n = basis.len();
        let vectors: Vec<Vec<RatFunc>> = {
            let coords: Vec<BTreeMap<Key, RatFunc>> = basis.iter().map(field_coordinates).collect();
            let mut keys: Vec<&Key> = coords.iter().flat_map(|c| c.keys()).collect();
            keys.sort();
            keys.dedup();
            coords
                .iter()
                .map(|c| keys.iter().map(|k| c.get(*k).cloned().unwrap_or_else(RatFunc::zero)).collect())
                .collect()
        };
        if rank(&vectors) < n {
            return Err(LieError::Dependent);
        }
        let mut c = vec![vec![vec![RatFunc::zero(); n]; n]; n];
        for j in 0..n {
            for k in j + 1..n {
                let w = commutator(&basis[j], &basis[k])?;
                if !w.is_point() {
                    return Err(LieError::NotPoint(names[j].clone(), names[k].clone()));
                }
                let coeffs = span_coordinates(&basis, &w)
                    .ok_or_else(|| LieError::NotClosed(names[j].clone(), names[k].clone(), w.to_string()))?;
                c[k][j] = coeffs.iter().map(|x| -x).collect();
                c[j][k] = coeffs;
            }
        }
        Ok(LieAlgebra { names, basis, structure: c })
    }

    /// Algebra of the catalog generators of a family.
    pub fn for_problem(p: &crate::prolong::PdeProblem) -> Result<Self, LieError> {
        let gens = crate::catalog::generators(p)?;
        LieAlgebra::from_fields(
            gens.iter().map(|g| g.name.clone()).collect(),
            gens.iter().map(|g| g.field().clone()).collect(),
        )
    }

    /// Abstract algebra from structure constants.
    pub fn from_structure(names: Vec<String>, structure: Vec<Vec<Vec<RatFunc>>>) -> Self {
        LieAlgebra { names, basis: Vec::new(), structure }
    }

    pub fn dim(&self) -> usize {
        self.structure.len()
    }

    pub fn structure(&self) -> &Vec<Vec<Vec<RatFunc>>> {
        &self.structure
    }

    pub fn bracket(&self, j: usize, k: usize) -> &[RatFunc] {
        &self.structure[j][k]
    }

    pub fn bracket_vec(&self, a: &[RatFunc], b: &[RatFunc]) -> Vec<RatFunc> {
        let n = self.dim();
        let mut out = vec![RatFunc::zero(); n];
        for j in 0..n {
            if a[j].is_zero() {
                continue;
            }
            for k in 0..n {
                if b[k].is_zero() || j == k {
                    continue;
                }
                let f = &a[j] * &b[k];
                for (i, c) in self.structure[j][k].iter().enumerate() {
                    if !c.is_zero() {
                        out[i] = &out[i] + &(&f * c);
                    }
                }
            }
        }
        out
    }

    /// Matrix of `ad_{X_i}` acting on coefficient columns: `M[j][k] = c[i][k][j]`.
    pub fn ad_matrix(&self, i: usize) -> Vec<Vec<RatFunc>> {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|k| self.structure[i][k][j].clone()).collect()).collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().flatten().flatten().all(RatFunc::is_zero)
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|k| (0..n).all(|i| self.structure[j][k][i] == -&self.structure[k][j][i])))
    }

    /// Triples violating the Jacobi identity.
    pub fn jacobi_violations(&self) -> Vec<(usize, usize, usize)> {
        let n = self.dim();
        let e = |i: usize| {
            let mut v = vec![RatFunc::zero(); n];
            v[i] = RatFunc::one();
            v
        };
        let mut bad = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (e(i), e(j), e(k));
                    let t1 = self.bracket_vec(&a, &self.bracket_vec(&b, &c));
                    let t2 = self.bracket_vec(&b, &self.bracket_vec(&c, &a));
                    let t3 = self.bracket_vec(&c, &self.bracket_vec(&a, &b));
                    if (0..n).any(|m| !(&(&t1[m] + &t2[m]) + &t3[m]).is_zero()) {
                        bad.push((i, j, k));
                    }
                }
            }
        }
        bad
    }

    /// `sum c_i X_i` with the basis names as formal symbols.
    pub fn element_expr(&self, coeffs: &[RatFunc]) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for (c, name) in coeffs.iter().zip(&self.names) {
            if !c.is_zero() {
                out += &(&c.to_expr()? * &Expr::param(name));
            }
        }
        Ok(out)
    }

    /// Commutator table cell `[X_j, X_k]`.
    pub fn cell_expr(&self, j: usize, k: usize) -> Result<Expr, ExprError> {
        self.element_expr(&self.structure[j][k])
    }

    /// Structure constants in the basis given by the rows of `p` (new_i = sum_j p[i][j] X_j).
    pub fn change_basis(&self, p: &[Vec<RatFunc>]) -> Option<LieAlgebra> {
        let n = self.dim();
        let images: Vec<Vec<RatFunc>> = p.to_vec();
        let mut c = vec![vec![vec![RatFunc::zero(); n]; n]; n];
        for j in 0..n {
            for k in 0..n {
                let b = self.bracket_vec(&images[j], &images[k]);
                c[j][k] = solve_in_basis(&images, &b)?;
            }
        }
        let names = (1..=n).map(|i| format!("Y{}", i)).collect();
        Some(LieAlgebra { names, basis: Vec::new(), structure: c })
    }

    /// Structure constants with parameters replaced by values.
    pub fn substitute(&self, values: &[(String, Expr)]) -> Result<LieAlgebra, ExprError> {
        let mut c = self.structure.clone();
        for x in c.iter_mut().flatten().flatten() {
            for (name, v) in values {
                *x = x.subst_param(name, v)?;
            }
        }
        Ok(LieAlgebra { names: self.names.clone(), basis: self.basis.clone(), structure: c })
    }

    pub fn params(&self) -> Vec<String> {
        let mut out: Vec<String> = self.structure.iter().flatten().flatten().flat_map(|x| x.params()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Floating-point structure constants.
    pub fn numeric(&self, env: &Env) -> Result<Vec<Vec<Vec<f64>>>, ExprError> {
        self.structure
            .iter()
            .map(|a| {
                a.iter()
                    .map(|b| b.iter().map(|x| x.eval(env)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect()
    }
}

/// Coordinates of `v` in the basis given by `rows`.
pub(crate) fn solve_in_basis(rows: &[Vec<RatFunc>], v: &[RatFunc]) -> Option<Vec<RatFunc>> {
    let n = rows.len();
    let dim = v.len();
    // columns: basis vectors, then the target
    let eqs = (0..dim).map(|m| {
        let mut r: Vec<(usize, RatFunc)> =
            rows.iter().enumerate().filter(|(_, b)| !b[m].is_zero()).map(|(j, b)| (j, b[m].clone())).collect();
        if !v[m].is_zero() {
            r.push((n, v[m].clone()));
        }
        r
    });
    let ech = rref(eqs, n + 1);
    let mut out = vec![RatFunc::zero(); n];
    for (p, row) in &ech.rows {
        if *p == n {
            return None;
        }
        if let Some(x) = row.get(&n) {
            out[*p] = x.clone();
        }
    }
    Some(out)
}

/// Basis of the subspace spanned by `vectors`.
pub(crate) fn span_basis(vectors: &[Vec<RatFunc>], dim: usize) -> Vec<Vec<RatFunc>> {
    let ech = rref(vectors.iter().map(|v| crate::detsolve::nullspace::dense_to_sparse(v)), dim);
    ech.rows
        .into_iter()
        .map(|(_, row)| {
            let mut v = vec![RatFunc::zero(); dim];
            for (c, x) in row {
                v[c] = x;
            }
            v
        })
        .collect()
}

/// Kernel of the linear map with the given matrix rows.
pub(crate) fn kernel(rows: &[Vec<RatFunc>], dim: usize) -> Vec<Vec<RatFunc>> {
    null_space(rows.iter().map(|r| crate::detsolve::nullspace::dense_to_sparse(r)), dim).basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::prolong::PdeProblem;

    pub(crate) fn qzk_algebra() -> LieAlgebra {
        let gens = catalog::generators(&PdeProblem::qzk()).unwrap();
        LieAlgebra::from_fields(
            gens.iter().map(|g| g.name.clone()).collect(),
            gens.iter().map(|g| g.field().clone()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn table_one_examples() {
        let a = qzk_algebra();
        assert_eq!(a.cell_expr(0, 3).unwrap(), Expr::param("X3"));
        assert_eq!(a.cell_expr(3, 4).unwrap(), Expr::param("X4").scale(&crate::expr::Rational::from_integer((-2).into())));
        assert!(a.cell_expr(1, 1).unwrap().is_zero());
        assert!(a.jacobi_violations().is_empty());
        assert!(a.is_antisymmetric());
    }

    #[test]
    fn printed_x5_does_not_close() {
        let gens = catalog::generators(&PdeProblem::qzk()).unwrap();
        let mut fields: Vec<VectorField> = gens.iter().map(|g| g.field().clone()).collect();
        fields[4] = gens[4].printed.clone();
        let names = gens.iter().map(|g| g.name.clone()).collect();
        assert!(matches!(LieAlgebra::from_fields(names, fields), Err(LieError::NotClosed(..))));
    }
}
