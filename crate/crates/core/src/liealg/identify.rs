//! Naming low-dimensional algebras from basis-independent invariants.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{kernel, solve_in_basis, span_basis, LieAlgebra};
use crate::detsolve::nullspace::rank;
use crate::expr::{Expr, Rational};
use crate::field::RatFunc;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fingerprint {
    pub dim: usize,
    pub derived_series: Vec<usize>,
    pub lower_central_series: Vec<usize>,
    pub center_dim: usize,
    pub solvable: bool,
    pub nilpotent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nilradical_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nilradical: Option<String>,
    /// Abelian direct summands split off through the center.
    pub abelian_summands: usize,
    /// Eigenvalues of `ad` of an element outside a codimension-one
    /// nilradical, scaled so the largest in modulus is 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonalizable: Option<bool>,
    /// Generic values used for symbolic parameters.
    pub parameter_values: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgebraId {
    pub name: Option<String>,
    pub fingerprint: Fingerprint,
}

impl AlgebraId {
    pub fn is_known(&self) -> bool {
        self.name.is_some()
    }
}

impl fmt::Display for AlgebraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            return f.write_str(n);
        }
        let fp = &self.fingerprint;
        write!(
            f,
            "UNKNOWN(dim={}, derived={:?}, lcs={:?}, center={}, solvable={}",
            fp.dim, fp.derived_series, fp.lower_central_series, fp.center_dim, fp.solvable
        )?;
        if let Some(n) = &fp.nilradical {
            write!(f, ", nilradical={}", n)?;
        } else if let Some(d) = fp.nilradical_dim {
            write!(f, ", nilradical dim={}", d)?;
        }
        if let Some(s) = &fp.spectrum {
            write!(f, ", spectrum=({})", s.join(", "))?;
        }
        write!(f, ")")
    }
}

const GENERIC: [(i64, i64); 8] = [(7, 3), (11, 5), (13, 7), (17, 11), (19, 13), (23, 17), (29, 19), (31, 23)];

/// Identification by invariants. Symbolic parameters are replaced by
/// generic rational values first.
pub fn identify_algebra(alg: &LieAlgebra) -> AlgebraId {
    let params = alg.params();
    let values: Vec<(String, Expr)> =
        params.iter().zip(GENERIC.iter().cycle()).map(|(p, (n, d))| (p.clone(), Expr::ratio(*n, *d))).collect();
    let concrete = alg.substitute(&values).expect("rational substitution in structure constants");
    let mut id = identify_concrete(&concrete);
    id.fingerprint.parameter_values = values.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
    id
}

type Vector = Vec<RatFunc>;

fn unit(n: usize, i: usize) -> Vector {
    let mut v = vec![RatFunc::zero(); n];
    v[i] = RatFunc::one();
    v
}

fn brackets(alg: &LieAlgebra, a: &[Vector], b: &[Vector]) -> Vec<Vector> {
    a.iter().flat_map(|x| b.iter().map(move |y| alg.bracket_vec(x, y))).collect()
}

fn derived_series(alg: &LieAlgebra) -> Vec<usize> {
    let n = alg.dim();
    let mut cur: Vec<Vector> = (0..n).map(|i| unit(n, i)).collect();
    let mut dims = vec![n];
    loop {
        let next = span_basis(&brackets(alg, &cur, &cur), n);
        if next.len() == cur.len() {
            return dims;
        }
        dims.push(next.len());
        cur = next;
        if cur.is_empty() {
            return dims;
        }
    }
}

fn lower_central_series(alg: &LieAlgebra) -> Vec<usize> {
    let n = alg.dim();
    let all: Vec<Vector> = (0..n).map(|i| unit(n, i)).collect();
    let mut cur = all.clone();
    let mut dims = vec![n];
    loop {
        let next = span_basis(&brackets(alg, &all, &cur), n);
        if next.len() == cur.len() {
            return dims;
        }
        dims.push(next.len());
        cur = next;
        if cur.is_empty() {
            return dims;
        }
    }
}

fn center(alg: &LieAlgebra) -> Vec<Vector> {
    let n = alg.dim();
    let c = alg.structure();
    let mut rows = Vec::new();
    for k in 0..n {
        for i in 0..n {
            rows.push((0..n).map(|j| c[j][k][i].clone()).collect::<Vector>());
        }
    }
    kernel(&rows, n)
}

fn killing_radical(alg: &LieAlgebra) -> Vec<Vector> {
    let n = alg.dim();
    let ads: Vec<Vec<Vector>> = (0..n).map(|a| alg.ad_matrix(a)).collect();
    let rows: Vec<Vector> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut s = RatFunc::zero();
                    for i in 0..n {
                        for j in 0..n {
                            s = &s + &(&ads[a][i][j] * &ads[b][j][i]);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    kernel(&rows, n)
}

/// Structure constants of the subalgebra spanned by `basis`.
fn restrict(alg: &LieAlgebra, basis: &[Vector]) -> Option<LieAlgebra> {
    let m = basis.len();
    let mut c = vec![vec![vec![RatFunc::zero(); m]; m]; m];
    for j in 0..m {
        for k in 0..m {
            c[j][k] = solve_in_basis(basis, &alg.bracket_vec(&basis[j], &basis[k]))?;
        }
    }
    Some(LieAlgebra::from_structure((1..=m).map(|i| format!("e{}", i)).collect(), c))
}

fn in_span(basis: &[Vector], v: &Vector) -> bool {
    solve_in_basis(basis, v).is_some()
}

fn extend(basis: &mut Vec<Vector>, candidates: impl IntoIterator<Item = Vector>, target: usize) {
    for v in candidates {
        if basis.len() >= target {
            break;
        }
        if !in_span(basis, &v) {
            basis.push(v);
        }
    }
}

fn abelian_name(k: usize) -> String {
    if k == 1 {
        "A_1".into()
    } else {
        format!("{}A_1", k)
    }
}

fn identify_concrete(alg: &LieAlgebra) -> AlgebraId {
    let n = alg.dim();
    let derived = derived_series(alg);
    let lcs = lower_central_series(alg);
    let z = center(alg);
    let solvable = derived.last() == Some(&0) || n == 0;
    let nilpotent = lcs.last() == Some(&0) || n == 0;
    let mut fp = Fingerprint {
        dim: n,
        derived_series: derived.clone(),
        lower_central_series: lcs,
        center_dim: z.len(),
        solvable,
        nilpotent,
        nilradical_dim: None,
        nilradical: None,
        abelian_summands: 0,
        spectrum: None,
        diagonalizable: None,
        parameter_values: Vec::new(),
    };
    if alg.is_abelian() {
        fp.abelian_summands = n;
        fp.nilradical_dim = Some(n);
        return AlgebraId { name: Some(abelian_name(n)), fingerprint: fp };
    }
    // split the central directions outside the derived algebra
    let all: Vec<Vector> = (0..n).map(|i| unit(n, i)).collect();
    let d = span_basis(&brackets(alg, &all, &all), n);
    let zd = {
        // x = sum b_j d_j with [x, e_k] = 0 for all k
        let mut rows = Vec::new();
        for k in 0..n {
            let imgs: Vec<Vector> = d.iter().map(|v| alg.bracket_vec(v, &all[k])).collect();
            for i in 0..n {
                rows.push(imgs.iter().map(|w| w[i].clone()).collect::<Vector>());
            }
        }
        kernel(&rows, d.len())
            .into_iter()
            .map(|b| {
                let mut x = vec![RatFunc::zero(); n];
                for (bj, dj) in b.iter().zip(&d) {
                    for i in 0..n {
                        x[i] = &x[i] + &(bj * &dj[i]);
                    }
                }
                x
            })
            .collect::<Vec<_>>()
    };
    let mut zs_full = zd.clone();
    extend(&mut zs_full, z.iter().cloned(), z.len());
    let zs: Vec<Vector> = zs_full[zd.len()..].to_vec();
    let k = zs.len();
    let mut w = d.clone();
    let mut with_zs = d.clone();
    with_zs.extend(zs.iter().cloned());
    for e in &all {
        if w.len() >= n - k {
            break;
        }
        if !in_span(&with_zs, e) {
            w.push(e.clone());
            with_zs.push(e.clone());
        }
    }
    fp.abelian_summands = k;
    let h = restrict(alg, &w).expect("complement of split center is an ideal");
    let (name, nil) = name_indecomposable(&h, &mut fp);
    fp.nilradical_dim = nil.as_ref().map(|m| m + k);
    let name = name.map(|base| if k == 0 { base } else { format!("{}⊕{}", base, abelian_name(k)) });
    AlgebraId { name, fingerprint: fp }
}

/// Name of an algebra without abelian direct summands, plus its nilradical dimension.
fn name_indecomposable(h: &LieAlgebra, fp: &mut Fingerprint) -> (Option<String>, Option<usize>) {
    let m = h.dim();
    let derived = derived_series(h);
    if derived.last() != Some(&0) {
        return (None, None);
    }
    let lcs = lower_central_series(h);
    if lcs.last() == Some(&0) {
        let name = (m == 3 && lcs == vec![3, 1, 0]).then(|| "A_{3,1}".to_string());
        return (name, Some(m));
    }
    let nil = killing_radical(h);
    let nil_alg = restrict(h, &nil);
    if let Some(na) = &nil_alg {
        let sub = identify_concrete(na);
        fp.nilradical = sub.name;
    }
    if nil.len() + 1 != m {
        return (None, Some(nil.len()));
    }
    let mut full = nil.clone();
    let units: Vec<Vector> = (0..m).map(|i| unit(m, i)).collect();
    extend(&mut full, units, m);
    let e = full[m - 1].clone();
    // [n_j, e] in the nilradical basis
    let cols: Vec<Vector> = nil.iter().map(|v| solve_in_basis(&nil, &h.bracket_vec(v, &e)).expect("ideal")).collect();
    let r = nil.len();
    let mat: Vec<Vec<Rational>> = (0..r)
        .map(|i| (0..r).map(|j| cols[j][i].as_rational().expect("concrete constants")).collect())
        .collect();
    let Some(roots) = rational_roots(&char_poly(&mat)) else {
        return (None, Some(r));
    };
    let scale = roots
        .iter()
        .max_by(|a, b| a.abs().cmp(&b.abs()).then(a.cmp(b)))
        .cloned()
        .unwrap_or_else(Rational::zero);
    if scale.is_zero() {
        return (None, Some(r));
    }
    let mut normalized: Vec<Rational> = roots.iter().map(|x| x / &scale).collect();
    normalized.sort_by(|a, b| b.cmp(a));
    fp.spectrum = Some(normalized.iter().map(|x| x.to_string()).collect());
    let diag = is_diagonalizable(&mat, &roots);
    fp.diagonalizable = Some(diag);
    let abelian_nil = nil_alg.as_ref().is_some_and(LieAlgebra::is_abelian);
    if r != 3 || !abelian_nil || normalized.iter().any(Zero::is_zero) {
        return (None, Some(r));
    }
    let others = &normalized[1..];
    let name = if diag {
        let (a, b) = (&others[1], &others[0]);
        Some(format!("A_{{4,5}}^{{{},{}}}", a, b))
    } else {
        let distinct: Vec<&Rational> = {
            let mut d: Vec<&Rational> = normalized.iter().collect();
            d.dedup();
            d
        };
        match distinct.len() {
            1 if rank_of(&mat, &roots[0]) == 1 => Some(format!("A_{{4,2}}^{{{}}}", 1)),
            1 => Some("A_{4,4}".to_string()),
            _ => {
                // one Jordan block of size two; parameter = simple / repeated eigenvalue
                let repeated = normalized.iter().find(|x| normalized.iter().filter(|y| y == x).count() == 2).cloned();
                let simple = normalized.iter().find(|x| normalized.iter().filter(|y| y == x).count() == 1).cloned();
                match (repeated, simple) {
                    (Some(rp), Some(s)) => Some(format!("A_{{4,2}}^{{{}}}", s / rp)),
                    _ => None,
                }
            }
        }
    };
    (name, Some(r))
}

fn rank_of(mat: &[Vec<Rational>], lambda: &Rational) -> usize {
    let rows: Vec<Vector> = mat
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| RatFunc::from(if i == j { x - lambda } else { x.clone() }))
                .collect()
        })
        .collect();
    rank(&rows)
}

fn is_diagonalizable(mat: &[Vec<Rational>], roots: &[Rational]) -> bool {
    let n = mat.len();
    let mut distinct = roots.to_vec();
    distinct.sort();
    distinct.dedup();
    distinct.iter().all(|l| {
        let mult = roots.iter().filter(|r| *r == l).count();
        n - rank_of(mat, l) == mult
    })
}

/// Monic characteristic polynomial, coefficients from the constant term up.
fn char_poly(a: &[Vec<Rational>]) -> Vec<Rational> {
    let n = a.len();
    let mut c = vec![Rational::zero(); n + 1];
    c[n] = Rational::one();
    let mut m = vec![vec![Rational::zero(); n]; n];
    for k in 1..=n {
        let mut next = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Rational::zero();
                for l in 0..n {
                    s += &a[i][l] * &m[l][j];
                }
                if i == j {
                    s += &c[n - k + 1];
                }
                next[i][j] = s;
            }
        }
        let mut tr = Rational::zero();
        for i in 0..n {
            for l in 0..n {
                tr += &a[i][l] * &next[l][i];
            }
        }
        c[n - k] = -tr / Rational::from_integer(BigInt::from(k));
        m = next;
    }
    c
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut i = BigInt::one();
    while &i * &i <= n {
        if (&n % &i).is_zero() {
            out.push(i.clone());
            let other = &n / &i;
            if other != i {
                out.push(other);
            }
        }
        i += 1;
    }
    out
}

/// All roots with multiplicity, if they are all rational.
fn rational_roots(poly: &[Rational]) -> Option<Vec<Rational>> {
    let mut p: Vec<Rational> = poly.to_vec();
    let mut roots = Vec::new();
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
        roots.push(Rational::zero());
    }
    while p.len() > 1 {
        let den = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p.iter().map(|c| (c * Rational::from_integer(den.clone())).to_integer()).collect();
        let found = divisors(&ints[0]).into_iter().find_map(|num| {
            divisors(ints.last().expect("nonempty")).into_iter().find_map(|d| {
                [Rational::new(num.clone(), d.clone()), -Rational::new(num.clone(), d)]
                    .into_iter()
                    .find(|cand| horner(&p, cand).is_zero())
            })
        })?;
        p = deflate(&p, &found);
        roots.push(found);
    }
    Some(roots)
}

fn horner(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn deflate(p: &[Rational], r: &Rational) -> Vec<Rational> {
    let n = p.len() - 1;
    let mut q = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for i in (0..n).rev() {
        carry = &p[i + 1] + carry * r;
        q[i] = carry.clone();
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn family(tag: &str) -> LieAlgebra {
        LieAlgebra::for_problem(&catalog::problem(tag, &[]).unwrap()).unwrap()
    }

    #[test]
    fn named_families() {
        assert_eq!(identify_algebra(&family("arbitrary")).name.as_deref(), Some("3A_1"));
        assert_eq!(identify_algebra(&family("power")).name.as_deref(), Some("A_{4,5}^{1/3,1/3}"));
        assert_eq!(identify_algebra(&family("quadratic")).name.as_deref(), Some("A_{4,5}^{1/3,1/3}"));
        assert_eq!(identify_algebra(&family("log")).name.as_deref(), Some("A_{3,1}⊕A_1"));
        assert_eq!(identify_algebra(&family("const")).name.as_deref(), Some("A_{4,5}^{1/3,1/3}⊕A_1"));
        let q = identify_algebra(&family("qzk"));
        assert!(q.name.is_none());
        assert_eq!(q.fingerprint.center_dim, 0);
        assert_eq!(q.fingerprint.nilradical.as_deref(), Some("A_{3,1}⊕A_1"));
        assert_eq!(q.fingerprint.spectrum.as_ref().unwrap(), &["1", "1/3", "1/3", "-2/3"]);
    }

    #[test]
    fn char_poly_of_diagonal() {
        let q = |n: i64| Rational::from_integer(n.into());
        let m = vec![vec![q(3), q(0)], vec![q(1), q(-2)]];
        let c = char_poly(&m);
        assert_eq!(c, vec![q(-6), q(-1), q(1)]);
        let mut r = rational_roots(&c).unwrap();
        r.sort();
        assert_eq!(r, vec![q(-2), q(3)]);
    }
}
