//! Published commutator and adjoint tables, embedded as data, and the
//! cell-by-cell comparison with computed tables.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{adjoint, AdjointResult, LieAlgebra, LieError};
use crate::catalog;
use crate::expr::{parse, Expr, ExprError};
use crate::prolong::PdeProblem;

const DATA: &str = include_str!("../../data/tables.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Commutator,
    Adjoint,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EntrySpec {
    pub row: usize,
    pub col: usize,
    pub printed: String,
    #[serde(default)]
    pub corrected: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct DisputeSpec {
    row: usize,
    col: usize,
    corrected: String,
    note: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TableSpec {
    pub id: String,
    pub kind: TableKind,
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub basis: Vec<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    #[serde(default)]
    rows: Vec<Vec<String>>,
    #[serde(default)]
    entries: Vec<EntrySpec>,
    #[serde(default)]
    disputes: Vec<DisputeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OptimalSpec {
    pub id: String,
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub basis: Vec<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    pub representatives: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct Data {
    tables: Vec<TableSpec>,
    optimal_systems: Vec<OptimalSpec>,
}

fn data() -> &'static Data {
    static D: OnceLock<Data> = OnceLock::new();
    D.get_or_init(|| serde_json::from_str(DATA).expect("embedded table data is valid"))
}

pub fn tables() -> &'static [TableSpec] {
    &data().tables
}

pub fn table(id: &str) -> Option<&'static TableSpec> {
    tables().iter().find(|t| t.id == id)
}

pub fn tables_for(family: &str, kind: TableKind) -> Vec<&'static TableSpec> {
    tables().iter().filter(|t| t.family == family && t.kind == kind).collect()
}

pub fn optimal_systems() -> &'static [OptimalSpec] {
    &data().optimal_systems
}

pub fn optimal_system(id: &str) -> Option<&'static OptimalSpec> {
    optimal_systems().iter().find(|t| t.id == id)
}

pub(crate) fn parse_params(params: &BTreeMap<String, String>) -> Result<Vec<(String, Expr)>, ExprError> {
    params.iter().map(|(k, v)| Ok((k.clone(), parse(v)?))).collect()
}

pub(crate) fn parse_aliased(s: &str, aliases: &BTreeMap<String, String>) -> Result<Expr, ExprError> {
    let mut e = parse(s)?;
    for (from, to) in aliases {
        e = e.subst_param(from, &Expr::param(to))?;
    }
    Ok(e)
}

impl TableSpec {
    pub fn problem(&self) -> Result<PdeProblem, ExprError> {
        let values = parse_params(&self.params)?;
        Ok(catalog::problem(&self.family, &values).expect("embedded family tags are valid"))
    }

    /// All transcribed cells with dispute annotations attached.
    pub fn cells(&self) -> Vec<EntrySpec> {
        let mut out = self.entries.clone();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, printed) in row.iter().enumerate() {
                let d = self.disputes.iter().find(|d| d.row == i && d.col == j);
                out.push(EntrySpec {
                    row: i,
                    col: j,
                    printed: printed.clone(),
                    corrected: d.map(|d| d.corrected.clone()),
                    note: d.map(|d| d.note.clone()),
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum CellStatus {
    Agree,
    ExpectedDispute,
    Disagree,
}

impl std::fmt::Display for CellStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellStatus::Agree => "AGREE",
            CellStatus::ExpectedDispute => "EXPECTED-DISPUTE",
            CellStatus::Disagree => "DISAGREE",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellCheck {
    pub row: String,
    pub col: String,
    pub printed: String,
    pub computed: String,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableCheck {
    pub table: String,
    pub family: String,
    pub kind: TableKind,
    pub cells: Vec<CellCheck>,
    pub case_splits: Vec<String>,
}

impl TableCheck {
    pub fn count(&self, s: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == s).count()
    }

    pub fn all_agree(&self) -> bool {
        self.count(CellStatus::Agree) == self.cells.len()
    }

    pub fn no_disagreement(&self) -> bool {
        self.count(CellStatus::Disagree) == 0
    }
}

/// Dense computed table: commutators `[X_i, X_j]` or images `Ad(exp(eps X_i)) X_j`.
pub fn computed_table(alg: &LieAlgebra, kind: TableKind) -> Result<(Vec<Vec<Option<Expr>>>, Vec<String>), ExprError> {
    let n = alg.dim();
    let eps = Expr::param("eps");
    let mut splits = Vec::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let row = match kind {
            TableKind::Commutator => (0..n).map(|j| alg.cell_expr(i, j).map(Some)).collect::<Result<Vec<_>, _>>()?,
            TableKind::Adjoint => match adjoint(alg, i) {
                AdjointResult::Closed(m) => {
                    for s in &m.case_splits {
                        if !splits.contains(s) {
                            splits.push(s.clone());
                        }
                    }
                    (0..n).map(|j| m.image_expr(alg, j, &eps).map(Some)).collect::<Result<Vec<_>, _>>()?
                }
                AdjointResult::NumericOnly { .. } => vec![None; n],
            },
        };
        out.push(row);
    }
    Ok((out, splits))
}

pub fn check_table(spec: &TableSpec) -> Result<TableCheck, LieError> {
    let alg = LieAlgebra::for_problem(&spec.problem()?)?;
    if alg.names != spec.basis {
        return Err(LieError::BasisMismatch(spec.basis.join(", "), alg.names.join(", ")));
    }
    let (computed, case_splits) = computed_table(&alg, spec.kind)?;
    let mut cells = Vec::new();
    for e in spec.cells() {
        let printed = parse_aliased(&e.printed, &spec.aliases)?;
        let value = computed[e.row][e.col].clone();
        let status = match &value {
            Some(v) if *v == printed => CellStatus::Agree,
            Some(v) => match &e.corrected {
                Some(c) if parse_aliased(c, &spec.aliases)? == *v => CellStatus::ExpectedDispute,
                _ => CellStatus::Disagree,
            },
            None => CellStatus::Disagree,
        };
        cells.push(CellCheck {
            row: alg.names[e.row].clone(),
            col: alg.names[e.col].clone(),
            printed: e.printed.clone(),
            computed: value.map(|v| v.to_string()).unwrap_or_else(|| "numeric only".into()),
            status,
            note: e.note.clone(),
        });
    }
    if spec.rows.is_empty() && spec.kind == TableKind::Commutator {
        // a sparse list claims every other bracket vanishes
        let n = alg.dim();
        for i in 0..n {
            for j in i + 1..n {
                let listed = spec.entries.iter().any(|e| (e.row, e.col) == (i, j) || (e.row, e.col) == (j, i));
                if let Some(v) = computed[i][j].as_ref().filter(|v| !listed && !v.is_zero()) {
                    cells.push(CellCheck {
                        row: alg.names[i].clone(),
                        col: alg.names[j].clone(),
                        printed: "0".into(),
                        computed: v.to_string(),
                        status: CellStatus::Disagree,
                        note: Some("nonzero bracket missing from the list".into()),
                    });
                }
            }
        }
    }
    Ok(TableCheck { table: spec.id.clone(), family: spec.family.clone(), kind: spec.kind, cells, case_splits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_parse() {
        assert!(tables().len() >= 10);
        for t in tables() {
            for c in t.cells() {
                parse_aliased(&c.printed, &t.aliases).unwrap();
            }
        }
    }
}
