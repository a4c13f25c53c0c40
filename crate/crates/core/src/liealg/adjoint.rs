//! Adjoint representation `Ad(exp(eps X_i)) = exp(-eps ad_{X_i})`.

use nalgebra::DMatrix;

use super::expoly::{solve_linear, ExpPoly};
use super::LieAlgebra;
use crate::expr::{Env, Expr, ExprError};
use crate::field::RatFunc;

/// Closed form of the adjoint action of one basis element. Column `k`
/// holds the coefficients of `Ad(exp(eps X_i)) X_k`.
#[derive(Debug, Clone)]
pub struct AdjointMatrix {
    pub generator: usize,
    pub entries: Vec<Vec<ExpPoly>>,
    pub case_splits: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum AdjointResult {
    Closed(AdjointMatrix),
    /// `ad_{X_i}` is not triangular in any ordering of the basis.
    NumericOnly { generator: usize, warning: String },
}

impl AdjointResult {
    pub fn closed(&self) -> Option<&AdjointMatrix> {
        match self {
            AdjointResult::Closed(m) => Some(m),
            AdjointResult::NumericOnly { .. } => None,
        }
    }
}

impl AdjointMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// `Ad(exp(eps X_i)) X_k` in terms of the basis names.
    pub fn image_expr(&self, alg: &LieAlgebra, k: usize, eps: &Expr) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for (j, row) in self.entries.iter().enumerate() {
            let c = row[k].to_expr(eps)?;
            if !c.is_zero() {
                out += &(&c * &Expr::param(&alg.names[j]));
            }
        }
        Ok(out)
    }

    pub fn eval(&self, eps: f64, env: &Env) -> Result<DMatrix<f64>, ExprError> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                m[(j, k)] = self.entries[j][k].eval(eps, env)?;
            }
        }
        Ok(m)
    }

    /// Matrix product `self * other` of the entries.
    pub fn compose(&self, other: &AdjointMatrix) -> Vec<Vec<ExpPoly>> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        (0..n).fold(ExpPoly::zero(), |acc, l| acc.add(&self.entries[j][l].mul(&other.entries[l][k])))
                    })
                    .collect()
            })
            .collect()
    }

    /// The action of `exp(-eps X_i)`.
    pub fn inverse(&self) -> AdjointMatrix {
        AdjointMatrix {
            generator: self.generator,
            entries: self.entries.iter().map(|row| row.iter().map(ExpPoly::reflect).collect()).collect(),
            case_splits: self.case_splits.clone(),
        }
    }
}

/// Solves `y' = N y`, `N = -ad_{X_i}`, column by column along a triangular
/// ordering of the basis.
pub fn adjoint(alg: &LieAlgebra, i: usize) -> AdjointResult {
    let ad = alg.ad_matrix(i);
    let nmat: Vec<Vec<RatFunc>> = ad.iter().map(|row| row.iter().map(|x| -x).collect()).collect();
    match exp_triangular(&nmat) {
        Some((entries, case_splits)) => AdjointResult::Closed(AdjointMatrix { generator: i, entries, case_splits }),
        None => AdjointResult::NumericOnly {
            generator: i,
            warning: format!("ad({}) has a cyclic coupling; only numeric evaluation is available", alg.names[i]),
        },
    }
}

/// `exp(eps N)` for a matrix that is triangular up to a permutation, or
/// `None` when the coupling graph has a cycle.
pub(crate) fn exp_triangular(nmat: &[Vec<RatFunc>]) -> Option<(Vec<Vec<ExpPoly>>, Vec<String>)> {
    let n = nmat.len();
    let order = triangular_order(nmat)?;
    let mut splits = Vec::new();
    let mut entries = vec![vec![ExpPoly::zero(); n]; n];
    for k in 0..n {
        let mut y: Vec<Option<ExpPoly>> = vec![None; n];
        for &j in &order {
            let mut g = ExpPoly::zero();
            for l in 0..n {
                if l != j && !nmat[j][l].is_zero() {
                    let yl = y[l].as_ref().expect("dependencies solved first");
                    g = g.add(&yl.scale(&nmat[j][l]));
                }
            }
            let y0 = if j == k { RatFunc::one() } else { RatFunc::zero() };
            y[j] = Some(solve_linear(&nmat[j][j], &g, &y0, &mut splits));
        }
        for j in 0..n {
            entries[j][k] = y[j].take().unwrap_or_default();
        }
    }
    Some((entries, splits))
}

fn triangular_order(m: &[Vec<RatFunc>]) -> Option<Vec<usize>> {
    let n = m.len();
    let deps: Vec<Vec<usize>> = (0..n).map(|j| (0..n).filter(|&l| l != j && !m[j][l].is_zero()).collect()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&j| !done[j] && deps[j].iter().all(|&l| done[l]))?;
        done[next] = true;
        order.push(next);
    }
    Some(order)
}

/// `exp(-eps ad_{X_i})` from numeric structure constants.
pub fn adjoint_numeric(c: &[Vec<Vec<f64>>], i: usize, eps: f64) -> DMatrix<f64> {
    let n = c.len();
    let m = DMatrix::from_fn(n, n, |j, k| -eps * c[i][k][j]);
    m.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::liealg::tests::qzk_algebra;

    #[test]
    fn scaling_row() {
        let a = qzk_algebra();
        let ad = adjoint(&a, 4);
        let m = ad.closed().unwrap();
        let eps = Expr::param("eps");
        assert_eq!(m.image_expr(&a, 0, &eps).unwrap(), parse("exp(3*eps)*X1").unwrap());
        assert_eq!(m.image_expr(&a, 3, &eps).unwrap(), parse("exp(-2*eps)*X4").unwrap());
        assert_eq!(m.image_expr(&a, 4, &eps).unwrap(), parse("X5").unwrap());
    }

    #[test]
    fn translation_row() {
        let a = qzk_algebra();
        let m = adjoint(&a, 0);
        let m = m.closed().unwrap();
        let eps = Expr::param("eps");
        assert_eq!(m.image_expr(&a, 4, &eps).unwrap(), parse("X5 - 3*eps*X1").unwrap());
        assert_eq!(m.image_expr(&a, 3, &eps).unwrap(), parse("X4 - eps*X3").unwrap());
    }

    #[test]
    fn inverse_and_numeric_agree() {
        let a = qzk_algebra();
        let c = a.numeric(&Env::new()).unwrap();
        for i in 0..a.dim() {
            let m = adjoint(&a, i);
            let m = m.closed().unwrap();
            let id = m.compose(&m.inverse());
            for (j, row) in id.iter().enumerate() {
                for (k, e) in row.iter().enumerate() {
                    let want = if j == k { ExpPoly::constant(RatFunc::one()) } else { ExpPoly::zero() };
                    assert_eq!(*e, want);
                }
            }
            let closed = m.eval(0.7, &Env::new()).unwrap();
            let numeric = adjoint_numeric(&c, i, 0.7);
            assert!((closed - numeric).norm() < 1e-10);
        }
    }
}
