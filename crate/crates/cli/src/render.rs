use std::fmt::Write as _;
use std::io::IsTerminal;
use std::sync::OnceLock;

use serde::Serialize;
use serde_json::{json, Value};

use symmetra::detsolve::{SymmetryBasis, VerifyReport as SpanReport};
use symmetra::expr::{to_latex, Expr};
use symmetra::liealg::optimal::OptimalReport;
use symmetra::liealg::tables::{CellStatus, TableCheck, TableKind};
use symmetra::liealg::LieAlgebra;
use symmetra::numverify::VerifyReport;
use symmetra::phase::PhaseSummary;
use symmetra::prolong::VectorField;
use symmetra::reduce::{Invariant, ReducedOde};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Latex,
    Csv,
}

static COLOR: OnceLock<bool> = OnceLock::new();

/// Colour only on a terminal, and never when SYMMETRA_NO_COLOR is set.
pub fn init_color(to_file: bool) {
    let on = !to_file && std::io::stdout().is_terminal() && std::env::var_os("SYMMETRA_NO_COLOR").is_none();
    let _ = COLOR.set(on);
}

fn paint(word: &str) -> String {
    if !COLOR.get().copied().unwrap_or(false) {
        return word.to_string();
    }
    let code = match word {
        "AGREE" | "PASS" | "CONTAINED" => "32",
        "EXPECTED-DISPUTE" | "DISPUTE-CONFIRMED" | "DISPUTE" => "33",
        _ => "31",
    };
    format!("\x1b[{code}m{word}\x1b[0m")
}

pub fn kind_name(kind: TableKind) -> &'static str {
    match kind {
        TableKind::Commutator => "commutator",
        TableKind::Adjoint => "adjoint",
    }
}

/// One rendered result, with whichever formats make sense for it.
pub struct Output {
    json: Value,
    text: String,
    latex: Option<String>,
    csv: Option<String>,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn field_latex(v: &VectorField) -> String {
    let mut parts = Vec::new();
    for (c, d) in v.components().iter().zip(["t", "x", "z", "u"]) {
        if c.is_zero() {
            continue;
        }
        let body = to_latex(c);
        let body = if c.len() > 1 { format!("\\left({body}\\right)") } else { body };
        let body = if body == "1" { String::new() } else { body };
        parts.push(format!("{body}\\partial_{{{d}}}"));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ").replace("+ -", "- ")
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn status_word(s: CellStatus) -> String {
    paint(&s.to_string())
}

impl Output {
    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.json).expect("json") + "\n"),
            Format::Text => Ok(self.text.clone()),
            Format::Latex => self.latex.clone().ok_or_else(|| "this subcommand has no LaTeX output".into()),
            Format::Csv => self.csv.clone().ok_or_else(|| "this subcommand has no CSV output".into()),
        }
    }

    pub fn csv(data: String) -> Output {
        Output { json: Value::Null, text: data.clone(), latex: None, csv: Some(data) }
    }

    pub fn symmetries(basis: &SymmetryBasis, check: &SpanReport, algebra: Option<String>, json: Value) -> Output {
        let mut text = String::new();
        let _ = writeln!(text, "family {}: dimension {}", basis.family, basis.dimension());
        if let Some(f) = &basis.infinite_family {
            let _ = writeln!(text, "  plus infinite family {} with {}", f.shape, f.condition);
        }
        for (i, g) in basis.generators.iter().enumerate() {
            let _ = writeln!(text, "  Y{} = {}", i + 1, g);
        }
        if let Some(a) = &algebra {
            let _ = writeln!(text, "algebra: {a}");
        }
        for s in &basis.case_splits {
            let _ = writeln!(text, "case split: {s}");
        }
        let _ = writeln!(
            text,
            "published generators (dimension {} vs computed {}):",
            check.expected_dimension, check.computed_dimension
        );
        for e in &check.entries {
            let status = serde_json::to_value(&e.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            let _ = write!(text, "  {:<6} {:<18} {}", e.name, paint(&status), e.printed);
            if let Some(c) = &e.corrected {
                let _ = write!(text, "  (corrected: {c})");
            }
            text.push('\n');
        }
        let mut latex = String::from("\\begin{align*}\n");
        for (i, g) in basis.generators.iter().enumerate() {
            let _ = writeln!(latex, "  Y_{{{}}} &= {} \\\\", i + 1, field_latex(g));
        }
        latex.push_str("\\end{align*}\n");
        let mut csv = String::from("generator,xi_t,xi_x,xi_z,eta\n");
        for (i, g) in basis.generators.iter().enumerate() {
            let c = g.to_strings();
            let _ = writeln!(csv, "Y{},{}", i + 1, c.iter().map(|s| csv_escape(s)).collect::<Vec<_>>().join(","));
        }
        Output { json, text, latex: Some(latex), csv: Some(csv) }
    }

    pub fn table(alg: &LieAlgebra, kind: TableKind, cells: &[Vec<Option<Expr>>], splits: &[String]) -> Output {
        let names = &alg.names;
        let show = |c: &Option<Expr>| c.as_ref().map(|e| e.to_string()).unwrap_or_else(|| "numeric only".into());
        let corner = match kind {
            TableKind::Commutator => "[ , ]",
            TableKind::Adjoint => "Ad",
        };
        let width = cells.iter().flatten().map(|c| show(c).len()).chain(names.iter().map(String::len)).max().unwrap_or(4).max(5);
        let mut text = format!("{corner:<8}");
        for n in names {
            let _ = write!(text, " | {n:<width$}");
        }
        text.push('\n');
        for (i, row) in cells.iter().enumerate() {
            let _ = write!(text, "{:<8}", names[i]);
            for c in row {
                let _ = write!(text, " | {:<width$}", show(c));
            }
            text.push('\n');
        }
        for s in splits {
            let _ = writeln!(text, "case split: {s}");
        }

        let latex_name = |n: &str| {
            let (head, tail) = n.split_at(2.min(n.len()));
            let tail = tail.to_string();
            if tail.is_empty() {
                format!("{}_{{{}}}", &head[..1], &head[1..])
            } else {
                format!("{}_{{{}}}^{{{}}}", &head[..1], &head[1..], tail)
            }
        };
        let latex_cell = |c: &Option<Expr>| -> String {
            let Some(e) = c else { return "\\text{numeric}".into() };
            let mut s = to_latex(e);
            for n in names.iter().rev() {
                s = s.replace(n.as_str(), &latex_name(n));
            }
            s
        };
        let mut latex = format!("\\begin{{tabular}}{{c|{}}}\n", "c".repeat(names.len()));
        let corner_tex = match kind {
            TableKind::Commutator => "[\\cdot,\\cdot]",
            TableKind::Adjoint => "\\mathrm{Ad}",
        };
        let _ = write!(latex, "${corner_tex}$");
        for n in names {
            let _ = write!(latex, " & ${}$", latex_name(n));
        }
        latex.push_str(" \\\\\n\\hline\n");
        for (i, row) in cells.iter().enumerate() {
            let _ = write!(latex, "${}$", latex_name(&names[i]));
            for c in row {
                let _ = write!(latex, " & ${}$", latex_cell(c));
            }
            latex.push_str(" \\\\\n");
        }
        latex.push_str("\\end{tabular}\n");

        let mut csv = String::from("row,col,value\n");
        for (i, row) in cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let _ = writeln!(csv, "{},{},{}", names[i], names[j], csv_escape(&show(c)));
            }
        }
        let json = json!({
            "kind": kind_name(kind),
            "basis": names,
            "cells": cells.iter().map(|r| r.iter().map(|c| c.as_ref().map(|e| e.to_string())).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "case_splits": splits,
        });
        Output { json, text, latex: Some(latex), csv: Some(csv) }
    }

    pub fn checks(checks: Vec<TableCheck>) -> Output {
        let mut text = String::new();
        let mut csv = String::from("table,row,col,status,printed,computed\n");
        for t in &checks {
            let _ = writeln!(
                text,
                "{}: {} agree, {} expected-dispute, {} disagree",
                t.table,
                t.count(CellStatus::Agree),
                t.count(CellStatus::ExpectedDispute),
                t.count(CellStatus::Disagree)
            );
            for c in &t.cells {
                let _ = writeln!(text, "  [{}, {}] {:<16} printed {} | computed {}", c.row, c.col, status_word(c.status), c.printed, c.computed);
                if let Some(n) = &c.note {
                    let _ = writeln!(text, "      note: {n}");
                }
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    csv_escape(&t.table),
                    c.row,
                    c.col,
                    c.status,
                    csv_escape(&c.printed),
                    csv_escape(&c.computed)
                );
            }
        }
        Output { json: to_json(&checks), text, latex: None, csv: Some(csv) }
    }

    pub fn optimal(family: &str, report: OptimalReport) -> Output {
        let mut text = format!(
            "optimal system `{family}`: coverage {}/{} = {:.4} (seed {})\n",
            report.covered, report.samples, report.coverage, report.seed
        );
        for (label, hits) in &report.hits {
            let _ = writeln!(text, "  {label:<32} {hits}");
        }
        let _ = writeln!(text, "separation: {} checks, {} equivalences found", report.separation_checks, report.exceptions.len());
        for e in &report.exceptions {
            let _ = writeln!(text, "  {} {:?} ~ {} {:?}", e.from, e.values, e.to, e.image_parameters);
        }
        Output { json: to_json(&report), text, latex: None, csv: None }
    }

    pub fn reduction(chain: &[ReducedOde], invariants: &[Invariant], json: Value) -> Output {
        let mut text = String::new();
        for i in invariants {
            let _ = writeln!(text, "invariant ({:?}): {}", i.role, i.expr);
        }
        if let Some(a) = &chain[0].ansatz {
            let _ = writeln!(text, "y = {}", a.variable);
            let _ = writeln!(text, "u = {}", a.u);
        }
        let mut latex = String::from("\\begin{align*}\n");
        for (k, o) in chain.iter().enumerate() {
            let label = if k == 0 { "reduced".to_string() } else { format!("quadrature {k}") };
            let verified = paint(if o.verified { "PASS" } else { "FAIL" });
            let _ = writeln!(text, "{label} (order {}, verified {verified}): {} = 0", o.order, o.equation);
            let _ = writeln!(latex, "  & {} = 0 \\\\", to_latex(&o.equation));
        }
        latex.push_str("\\end{align*}\n");
        Output { json, text, latex: Some(latex), csv: None }
    }

    pub fn phase(summary: PhaseSummary) -> Output {
        let mut text = format!(
            "beta = {}, gamma = {}, U1 = {}, scale = {}\n",
            summary.beta, summary.gamma, summary.u1, summary.scale
        );
        if summary.points.is_empty() {
            text.push_str("no real stationary points\n");
        }
        for (p, period) in summary.points.iter().zip(&summary.periods) {
            let ev = p.eigenvalues.iter().map(|e| format!("{:.6}{:+.6}i", e.re, e.im)).collect::<Vec<_>>().join(", ");
            let _ = write!(text, "U* = {:.12}: {:?}, eigenvalues {}", p.u, p.class, ev);
            if let Some(per) = period {
                let _ = write!(text, ", small-orbit period {:.6}", per.period);
            }
            text.push('\n');
        }
        for c in &summary.claims {
            let _ = writeln!(text, "claim \"{}\": {} (computed {:?}) {}", c.claim, paint(&c.status), c.computed, c.note.as_deref().unwrap_or(""));
        }
        Output { json: to_json(&summary), text, latex: None, csv: None }
    }

    pub fn verify(report: VerifyReport) -> Output {
        let mut text = format!("family {}: {} grid points\n", report.family, report.grid_points);
        for r in &report.residuals {
            let _ = writeln!(text, "  residual {:<24} {:.3e} {}", r.solution, r.residual, paint(if r.pass { "PASS" } else { "FAIL" }));
        }
        let worst = report.flows.iter().map(|f| f.residual).fold(0.0, f64::max);
        let failed = report.flows.iter().filter(|f| !f.pass).count();
        let _ = writeln!(text, "  flows: {} checks, {} failed, worst {:.3e}", report.flows.len(), failed, worst);
        for f in report.flows.iter().filter(|f| !f.pass) {
            let _ = writeln!(text, "    {} eps={} on {}: {:.3e}", f.generator, f.eps, f.solution, f.residual);
        }
        let caught = report.corrupted.iter().filter(|c| c.residual > 1e-3).count();
        let _ = writeln!(
            text,
            "  corrupted generators (one component x 1.1): {}/{} checks exceed 1e-3 {}",
            caught,
            report.corrupted.len(),
            paint(if report.corruption_detected() { "PASS" } else { "FAIL" })
        );
        let mut csv = String::from("kind,solution,generator,eps,residual,pass\n");
        for r in &report.residuals {
            let _ = writeln!(csv, "residual,{},,,{:e},{}", csv_escape(&r.solution), r.residual, r.pass);
        }
        for f in &report.flows {
            let _ = writeln!(csv, "flow,{},{},{},{:e},{}", csv_escape(&f.solution), f.generator, f.eps, f.residual, f.pass);
        }
        for f in &report.corrupted {
            let _ = writeln!(csv, "corrupted,{},{},{},{:e},", csv_escape(&f.solution), f.generator, f.eps, f.residual);
        }
        Output { json: to_json(&report), text, latex: None, csv: Some(csv) }
    }

    pub fn classification(rows: Vec<ClassRow>, check: bool) -> Output {
        let dim = |d: usize, inf: bool| if inf { format!("{d} & inf") } else { d.to_string() };
        let mut text = format!("{:<22} {:<10} {:<10} algebra\n", "f(u)", "computed", "published");
        for r in &rows {
            let _ = write!(text, "{:<22} {:<10} {:<10} {}", r.f, dim(r.dimension, r.infinite), dim(r.published, r.published_infinite), r.algebra);
            if check {
                let _ = write!(text, "  {}", status_word(r.status));
            }
            text.push('\n');
        }
        let mut latex = String::from("\\begin{tabular}{lll}\n$f(u)$ & dimension & algebra \\\\\n\\hline\n");
        for r in &rows {
            let f = symmetra::expr::parse(&r.f).map(|e| to_latex(&e)).unwrap_or_else(|_| format!("\\text{{{}}}", r.f));
            let d = if r.infinite { format!("{} \\& $\\infty$", r.dimension) } else { r.dimension.to_string() };
            let _ = writeln!(latex, "${f}$ & {d} & {} \\\\", r.algebra.replace('_', "\\_"));
        }
        latex.push_str("\\end{tabular}\n");
        let mut csv = String::from("f,family,dimension,infinite,published,published_infinite,algebra\n");
        for r in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                csv_escape(&r.f),
                r.family,
                r.dimension,
                r.infinite,
                r.published,
                r.published_infinite,
                csv_escape(&r.algebra)
            );
        }
        Output { json: to_json(&rows), text, latex: Some(latex), csv: Some(csv) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassRow {
    pub f: String,
    pub family: String,
    pub dimension: usize,
    pub infinite: bool,
    pub published: usize,
    pub published_infinite: bool,
    pub algebra: String,
    pub status: CellStatus,
}
