//! Solving the determining system and checking published generator lists.

pub mod nullspace;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::CatalogGenerator;
use crate::expr::{Arg, Atom, DerivativeIndex, Expr, ExprError, FuncSym, Monomial, Var};
use crate::field::RatFunc;
use crate::prolong::{determining_equations, symmetry_defect, AnsatzSpec, DeterminingSystem, PdeProblem, VectorField};

pub use nullspace::{null_space, rank, rref, NullSpace};

/// Marker for `b(t,x,z) d_u` with `b` any solution of the (linear) equation.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct InfiniteFamily {
    pub shape: String,
    pub condition: String,
    /// Polynomial solutions found inside the ansatz.
    pub sampled_dimension: usize,
}

#[derive(Debug, Clone)]
pub struct SymmetryBasis {
    pub family: String,
    pub generators: Vec<VectorField>,
    pub infinite_family: Option<InfiniteFamily>,
    /// Ansatz-limited members of the infinite family.
    pub family_members: Vec<VectorField>,
    pub case_splits: Vec<String>,
    pub unknowns: usize,
    pub relations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub family: String,
    pub dimension: usize,
    pub generators: Vec<String>,
    pub infinite_family: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite_family_condition: Option<String>,
    pub case_splits: Vec<String>,
}

impl SymmetryBasis {
    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    pub fn report(&self) -> SymmetryReport {
        SymmetryReport {
            family: self.family.clone(),
            dimension: self.dimension(),
            generators: self.generators.iter().map(|g| g.to_string()).collect(),
            infinite_family: self.infinite_family.is_some(),
            infinite_family_condition: self.infinite_family.as_ref().map(|f| f.condition.clone()),
            case_splits: self.case_splits.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("computed generator `{0}` fails the symmetry condition")]
    Verification(String),
}

/// Symmetry algebra of `p` inside the ansatz.
pub fn find_symmetries(p: &PdeProblem, ansatz: &AnsatzSpec) -> Result<SymmetryBasis, SolveError> {
    let sys = determining_equations(p, ansatz)?;
    let linear = p.is_linear() && p.rhs.is_some();
    // source-term columns go last so that the b(t,x,z) family separates
    let mut order: Vec<usize> = (0..sys.unknowns.len()).collect();
    if linear {
        order.sort_by_key(|&k| (sys.unknowns[k].is_source_term(), k));
    }
    let mut position = vec![0; order.len()];
    for (i, &k) in order.iter().enumerate() {
        position[k] = i;
    }
    let rows = sys
        .relations
        .iter()
        .map(|r| r.coeffs.iter().map(|(k, c)| (position[*k], c.clone())).collect::<Vec<_>>());
    let ns = null_space(rows, order.len());
    let n_finite = order.iter().filter(|&&k| !(linear && sys.unknowns[k].is_source_term())).count();

    let to_field = |v: &[RatFunc], keep_source: bool| -> Result<VectorField, ExprError> {
        let mut coeffs = vec![RatFunc::zero(); v.len()];
        for (i, &k) in order.iter().enumerate() {
            if keep_source || i < n_finite {
                coeffs[k] = v[i].clone();
            }
        }
        sys.field_from(&coeffs)
    };

    let mut generators = Vec::new();
    let mut members = Vec::new();
    for v in &ns.basis {
        let lead = v.iter().position(|x| !x.is_zero()).unwrap_or(0);
        if linear && lead >= n_finite {
            members.push(to_field(v, true)?);
        } else {
            generators.push((to_field(v, !linear)?, to_field(v, true)?));
        }
    }
    let checked: Vec<VectorField> = generators
        .into_par_iter()
        .map(|(projected, full)| -> Result<VectorField, SolveError> {
            if symmetry_defect(&projected, p)?.is_zero() {
                return Ok(projected);
            }
            if symmetry_defect(&full, p)?.is_zero() {
                return Ok(full);
            }
            Err(SolveError::Verification(full.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut checked = checked;
    checked.sort_by_cached_key(|g| {
        let degree = g.components().iter().map(|c| c.terms().map(|(m, _)| m.degree()).max().unwrap_or_default()).max();
        let support = g.components().iter().filter(|c| !c.is_zero()).count();
        (degree, support)
    });
    let infinite_family = (linear && !members.is_empty()).then(|| InfiniteFamily {
        shape: "b(t,x,z)∂u".into(),
        condition: linear_condition(p),
        sampled_dimension: members.len(),
    });
    Ok(SymmetryBasis {
        family: p.family.tag().to_string(),
        generators: checked,
        infinite_family,
        family_members: members,
        case_splits: ns.case_splits,
        unknowns: sys.unknowns.len(),
        relations: sys.relations.len(),
    })
}

fn linear_condition(p: &PdeProblem) -> String {
    let args = vec![Arg::Var(Var::T), Arg::Var(Var::X), Arg::Var(Var::Z)];
    let mut out = Expr::zero();
    for (m, c) in p.lhs.terms() {
        let mut coeff = Monomial::one();
        let mut jet = DerivativeIndex::ZERO;
        for (a, e) in m.factors() {
            match a {
                Atom::Jet(j) => jet = *j,
                other => coeff = coeff.mul(&Monomial::atom(other.clone(), e.clone())),
            }
        }
        let b = FuncSym { name: "b".into(), args: args.clone(), orders: vec![jet.t as i32, jet.x as i32, jet.z as i32] };
        out += &Expr::func(b).mul_monomial(&coeff, c);
    }
    format!("{} = 0", out)
}

/// Expansion of a field over the ansatz unknowns, `None` when it leaves the ansatz.
pub fn coordinates(sys: &DeterminingSystem, v: &VectorField) -> Option<Vec<RatFunc>> {
    let mut index: BTreeMap<(usize, Monomial), usize> = BTreeMap::new();
    for (k, u) in sys.unknowns.iter().enumerate() {
        let (m, _) = u.basis.as_monomial()?;
        index.insert((u.component, m.clone()), k);
    }
    let mut out = vec![RatFunc::zero(); sys.unknowns.len()];
    for c in 0..4 {
        for (m, coeff) in v.component(c).split_by_monomial() {
            let k = *index.get(&(c, m))?;
            out[k] = &out[k] + &RatFunc::from(coeff);
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Containment {
    Contained,
    NotContained,
    /// The printed form is outside the span but its correction is inside.
    DisputeConfirmed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectedCheck {
    pub name: String,
    pub printed: String,
    pub status: Containment,
    pub printed_defect_zero: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub family: String,
    pub computed_dimension: usize,
    pub expected_dimension: usize,
    pub dimensions_match: bool,
    pub entries: Vec<ExpectedCheck>,
    pub surplus: Vec<String>,
}

impl VerifyReport {
    pub fn all_contained(&self) -> bool {
        self.entries.iter().all(|e| e.status != Containment::NotContained)
    }
}

/// Compares a computed basis with an expected generator list.
pub fn verify_table(
    p: &PdeProblem,
    ansatz: &AnsatzSpec,
    computed: &SymmetryBasis,
    expected: &[CatalogGenerator],
) -> Result<VerifyReport, SolveError> {
    let sys = determining_equations(&PdeProblem { lhs: Expr::zero(), ..p.clone() }, ansatz)?;
    let coords = |v: &VectorField| coordinates(&sys, v);
    let mut span: Vec<Vec<RatFunc>> = Vec::new();
    for v in computed.generators.iter().chain(&computed.family_members) {
        span.push(coords(v).ok_or_else(|| SolveError::Verification(v.to_string()))?);
    }
    let base_rank = rank(&span);
    let inside = |v: &VectorField| -> bool {
        match coords(v) {
            None => false,
            Some(c) => {
                let mut rows = span.clone();
                rows.push(c);
                rank(&rows) == base_rank
            }
        }
    };
    let mut entries = Vec::new();
    let mut expected_rows = Vec::new();
    for gen in expected {
        let printed_in = inside(&gen.printed);
        let status = match (&gen.corrected, printed_in) {
            (_, true) => Containment::Contained,
            (Some(c), false) if inside(c) => Containment::DisputeConfirmed,
            _ => Containment::NotContained,
        };
        if let Some(c) = coords(gen.field()) {
            expected_rows.push(c);
        }
        entries.push(ExpectedCheck {
            name: gen.name.clone(),
            printed: gen.printed.to_string(),
            status,
            printed_defect_zero: symmetry_defect(&gen.printed, p)?.is_zero(),
            corrected: gen.corrected.as_ref().map(|c| c.to_string()),
            note: gen.note.clone(),
        });
    }
    // computed directions not spanned by the expected list
    let mut surplus = Vec::new();
    let mut acc = expected_rows.clone();
    for v in &computed.generators {
        let c = coords(v).expect("checked above");
        let before = rank(&acc);
        acc.push(c);
        if rank(&acc) > before {
            surplus.push(v.to_string());
        } else {
            acc.pop();
        }
    }
    let expected_dimension = rank(&expected_rows);
    Ok(VerifyReport {
        family: computed.family.clone(),
        computed_dimension: computed.dimension(),
        expected_dimension,
        dimensions_match: expected_dimension == computed.dimension(),
        entries,
        surplus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prolong::PdeProblem;

    #[test]
    fn zero_equation_has_no_relations() {
        let p = PdeProblem::custom(Expr::zero());
        let sys = determining_equations(&p, &AnsatzSpec::polynomial(1)).unwrap();
        assert!(sys.relations.is_empty());
    }

    #[test]
    fn transport_equation() {
        // u_t + u_z = 0 with degree one: many symmetries, all verified
        let p = PdeProblem::custom(crate::expr::parse("u_t + u_z").unwrap());
        let b = find_symmetries(&p, &AnsatzSpec::polynomial(1)).unwrap();
        assert!(b.infinite_family.is_some());
        for g in &b.generators {
            assert!(symmetry_defect(g, &p).unwrap().is_zero());
        }
    }
}
