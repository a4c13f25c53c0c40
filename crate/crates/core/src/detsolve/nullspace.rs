//! Exact Gauss-Jordan elimination over rational functions in the parameters.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::expr::{Expr, Rational};
use crate::field::RatFunc;

type SparseRow = BTreeMap<usize, RatFunc>;

#[derive(Debug, Clone, Default)]
pub struct NullSpace {
    /// Basis vectors in reduced echelon form.
    pub basis: Vec<Vec<RatFunc>>,
    pub rank: usize,
    /// Conditions under which a chosen symbolic pivot vanishes.
    pub case_splits: Vec<String>,
}

impl NullSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Echelon {
    /// Rows normalized to a unit pivot, sorted by pivot column.
    pub rows: Vec<(usize, SparseRow)>,
    pub case_splits: Vec<String>,
}

fn pivot_score(row: &SparseRow, col: usize) -> (bool, usize, usize) {
    let entry = &row[&col];
    (entry.as_rational().is_none(), entry.complexity(), row.len())
}

/// Reduced row echelon form. Columns are processed in increasing order;
/// constant pivots are preferred, and every symbolic pivot is recorded.
pub fn rref(rows: impl IntoIterator<Item = Vec<(usize, RatFunc)>>, ncols: usize) -> Echelon {
    let mut pending: Vec<SparseRow> = rows
        .into_iter()
        .map(|r| {
            let mut row = SparseRow::new();
            for (c, v) in r {
                assert!(c < ncols, "column {} out of range", c);
                if v.is_zero() {
                    continue;
                }
                let sum = match row.remove(&c) {
                    Some(old) => &old + &v,
                    None => v,
                };
                if !sum.is_zero() {
                    row.insert(c, sum);
                }
            }
            row
        })
        .filter(|r| !r.is_empty())
        .collect();
    let mut done: Vec<(usize, SparseRow)> = Vec::new();
    let mut splits: Vec<String> = Vec::new();
    for col in 0..ncols {
        let best = pending
            .iter()
            .enumerate()
            .filter(|(_, r)| r.contains_key(&col))
            .min_by_key(|(_, r)| pivot_score(r, col))
            .map(|(i, _)| i);
        let Some(i) = best else { continue };
        let mut row = pending.swap_remove(i);
        let pivot = row[&col].clone();
        if pivot.as_rational().is_none() {
            for cond in vanishing_conditions(pivot.num()) {
                if !splits.contains(&cond) {
                    splits.push(cond);
                }
            }
        }
        let inv = pivot.recip().expect("pivot is nonzero");
        for v in row.values_mut() {
            *v = &*v * &inv;
        }
        for other in pending.iter_mut().chain(done.iter_mut().map(|(_, r)| r)) {
            eliminate(other, &row, col);
        }
        pending.retain(|r| !r.is_empty());
        done.push((col, row));
    }
    done.sort_by_key(|(c, _)| *c);
    Echelon { rows: done, case_splits: splits }
}

/// Human-readable conditions under which a symbolic pivot is zero.
fn vanishing_conditions(num: &Expr) -> Vec<String> {
    zero_conditions(num).into_iter().map(|c| format!("pivot vanishes when {}", c)).collect()
}

/// Equations `factor = 0` under which `num` vanishes.
pub(crate) fn zero_conditions(num: &Expr) -> Vec<String> {
    match num.as_monomial() {
        Some((m, _)) => m.factors().filter(|(_, e)| e.is_positive()).map(|(a, _)| format!("{} = 0", a)).collect(),
        None => vec![format!("{} = 0", num.primitive())],
    }
}

fn eliminate(target: &mut SparseRow, pivot_row: &SparseRow, col: usize) {
    let Some(factor) = target.get(&col).cloned() else { return };
    for (c, v) in pivot_row {
        let delta = &factor * v;
        let new = match target.remove(c) {
            Some(old) => &old - &delta,
            None => -&delta,
        };
        if !new.is_zero() {
            target.insert(*c, new);
        }
    }
}

pub fn rank(rows: &[Vec<RatFunc>]) -> usize {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    rref(rows.iter().map(|r| r.iter().cloned().enumerate().collect()), ncols).rows.len()
}

/// Kernel of the sparse system, as an echelon basis.
pub fn null_space(rows: impl IntoIterator<Item = Vec<(usize, RatFunc)>>, ncols: usize) -> NullSpace {
    let ech = rref(rows, ncols);
    let pivots: Vec<usize> = ech.rows.iter().map(|(c, _)| *c).collect();
    let mut raw: Vec<Vec<RatFunc>> = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![RatFunc::zero(); ncols];
        v[free] = RatFunc::one();
        for (p, row) in &ech.rows {
            if let Some(x) = row.get(&free) {
                v[*p] = -x;
            }
        }
        raw.push(v);
    }
    let basis_ech = rref(raw.iter().map(|r| dense_to_sparse(r)), ncols);
    let mut case_splits = ech.case_splits;
    for s in basis_ech.case_splits {
        if !case_splits.contains(&s) {
            case_splits.push(s);
        }
    }
    let basis = basis_ech
        .rows
        .into_iter()
        .map(|(_, row)| {
            let mut v = vec![RatFunc::zero(); ncols];
            for (c, x) in row {
                v[c] = x;
            }
            clear_denominators(&v)
        })
        .collect();
    NullSpace { basis, rank: pivots.len(), case_splits }
}

pub fn dense_to_sparse(v: &[RatFunc]) -> Vec<(usize, RatFunc)> {
    v.iter().cloned().enumerate().filter(|(_, x)| !x.is_zero()).collect()
}

/// Scales a vector so that all entries are polynomial in the parameters
/// with coprime integer content and a positive leading entry.
pub fn clear_denominators(v: &[RatFunc]) -> Vec<RatFunc> {
    let mut out = v.to_vec();
    for _ in 0..out.len() + 1 {
        let Some(d) = out.iter().find(|x| x.as_expr().is_none()).map(|x| x.den().clone()) else { break };
        let factor = RatFunc::from(d);
        for x in out.iter_mut() {
            *x = &*x * &factor;
        }
    }
    let mut den_lcm = BigInt::one();
    let mut num_gcd = BigInt::zero();
    for x in &out {
        if let Some(e) = x.as_expr() {
            for (_, c) in e.terms() {
                den_lcm = den_lcm.lcm(c.denom());
                num_gcd = num_gcd.gcd(c.numer());
            }
        }
    }
    if num_gcd.is_zero() {
        return out;
    }
    let mut scale = Rational::new(den_lcm, num_gcd);
    let lead = out.iter().find(|x| !x.is_zero()).and_then(|x| x.as_expr().and_then(|e| e.leading().map(|(_, c)| c.clone())));
    if lead.is_some_and(|c| c.is_negative()) {
        scale = -scale;
    }
    out.iter().map(|x| x.scale(&scale)).collect()
}

pub fn rat_vec(v: &[i64]) -> Vec<RatFunc> {
    v.iter().map(|x| RatFunc::from(Expr::int(*x))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn r(n: i64) -> RatFunc {
        RatFunc::int(n)
    }

    #[test]
    fn small_kernel() {
        // a1 = 0, a2 - a3 = 0
        let ns = null_space(vec![vec![(0, r(1))], vec![(1, r(1)), (2, r(-1))]], 3);
        assert_eq!(ns.dimension(), 1);
        assert_eq!(ns.basis[0], rat_vec(&[0, 1, 1]));
    }

    #[test]
    fn symbolic_pivots_are_reported() {
        let mu = RatFunc::from(parse("mu - 1").unwrap());
        let ns = null_space(vec![vec![(0, mu), (1, r(1))], vec![(1, r(2))]], 2);
        assert_eq!(ns.dimension(), 0);
        assert_eq!(ns.case_splits, vec!["pivot vanishes when mu - 1 = 0".to_string()]);
    }

    #[test]
    fn rank_of_dependent_rows() {
        assert_eq!(rank(&[rat_vec(&[1, 2]), rat_vec(&[2, 4])]), 1);
    }
}
