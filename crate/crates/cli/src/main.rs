mod render;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use symmetra::catalog::{self, classification_rows, FAMILY_TAGS};
use symmetra::detsolve::{find_symmetries, verify_table};
use symmetra::expr::parse;
use symmetra::liealg::optimal::{optimal_system_check, setup, OptimalConfig};
use symmetra::liealg::tables::{check_table, computed_table, optimal_system, tables_for, CellStatus, TableKind};
use symmetra::liealg::{identify_algebra, LieAlgebra};
use symmetra::numverify::{verify_family, Grid, FLOW_EPS};
use symmetra::phase::{summarize, Nonlinearity, PhaseSystem, PointClass};
use symmetra::prolong::{AnsatzSpec, FCandidate, PdeProblem};
use symmetra::reduce::{combination, first_integral, joint_invariants, reduce_by_pair, ReducedOde};

use render::{Format, Output};

#[derive(Parser)]
#[command(name = "symmetra", version, about = "Lie point symmetries of the (2+1)-dimensional quantum Zakharov-Kuznetsov family")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Polynomial degree of the symmetry ansatz.
    #[arg(long, global = true, default_value_t = 3)]
    degree: u32,
    /// Tolerance override for numeric pass/fail decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Compare with the embedded published tables.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Latex,
    Csv,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Family tag: qzk, arbitrary, linear, const, power, quadratic, exp, log, tv-arbitrary, tv-power, tv-exp.
    #[arg(long, default_value = "qzk")]
    family: String,
    /// Parameter value, e.g. --param mu=2 (repeatable). Unset parameters stay symbolic.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the determining equations and compare with the published generators.
    Symmetries(FamilyArgs),
    /// Commutator table of the published generators.
    Commutators(FamilyArgs),
    /// Closed-form adjoint table.
    Adjoint(FamilyArgs),
    /// Randomized coverage and separation check of an optimal system.
    Optimal {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Similarity reduction by a pair of generators and its quadratures.
    Reduce {
        #[command(flatten)]
        family: FamilyArgs,
        /// Two combinations of the basis, e.g. "X1 + beta*X2" "X1 + gamma*X3".
        #[arg(long, num_args = 2, value_names = ["V1", "V2"], default_values = ["X1 + beta*X2", "X1 + gamma*X3"])]
        pair: Vec<String>,
    },
    /// Phase plane of the travelling-wave system.
    Phase(PhaseArgs),
    /// Grid residuals of the catalog solutions and of their images under symmetry flows.
    Verify(FamilyArgs),
    /// Symmetry dimensions across the nonlinearity classification.
    ClassifyF,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    u1: f64,
    /// Nonlinearity family: linear (f = U), power, quadratic, exp, log, const.
    #[arg(long, default_value = "linear")]
    f: String,
    /// Parameter value for the nonlinearity, e.g. --param mu=2.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Use the exact reduction with U'' scaled by 1/(beta^2 + gamma^2).
    #[arg(long)]
    normalized: bool,
    /// Initial condition "U,V" for the exported trajectory.
    #[arg(long, allow_hyphen_values = true)]
    ic: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 20_000)]
    steps: usize,
    /// Keep every n-th sample in CSV output.
    #[arg(long, default_value_t = 10)]
    every: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type Run = Result<(Output, bool), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    render::init_color(cli.common.out.is_some());
    let format = match cli.common.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
        FormatArg::Latex => Format::Latex,
        FormatArg::Csv => Format::Csv,
    };
    let result = match &cli.command {
        Command::Symmetries(f) => symmetries(f, &cli.common),
        Command::Commutators(f) => table(f, &cli.common, TableKind::Commutator),
        Command::Adjoint(f) => table(f, &cli.common, TableKind::Adjoint),
        Command::Optimal { family, samples } => optimal(family, *samples, &cli.common),
        Command::Reduce { family, pair } => reduce(family, pair),
        Command::Phase(a) => phase(a, format),
        Command::Verify(f) => verify(f, &cli.common),
        Command::ClassifyF => classify(&cli.common),
    };
    match result {
        Ok((output, ok)) => {
            let text = match output.render(format) {
                Ok(t) => t,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(2);
                }
            };
            if let Some(path) = &cli.common.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                    if e.kind() != std::io::ErrorKind::BrokenPipe {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn parse_assignments(items: &[String]) -> Result<Vec<(String, String)>, Failure> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected NAME=VALUE, got `{s}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn family_problem(f: &FamilyArgs) -> Result<PdeProblem, Failure> {
    if !FAMILY_TAGS.contains(&f.family.as_str()) {
        return Err(usage(format!("unknown family `{}` (expected one of {})", f.family, FAMILY_TAGS.join(", "))));
    }
    let allowed: &[&str] = match f.family.as_str() {
        "const" | "log" => &["u0"],
        "power" | "exp" => &["mu", "u0"],
        "quadratic" => &["kappa", "u0"],
        "tv-power" | "tv-exp" => &["p", "q"],
        _ => &[],
    };
    let mut values = Vec::new();
    for (k, v) in parse_assignments(&f.params)? {
        if !allowed.contains(&k.as_str()) {
            return Err(usage(format!("family `{}` has no parameter `{k}`", f.family)));
        }
        let e = parse(&v).map_err(|e| usage(format!("bad value for {k}: {e}")))?;
        if matches!(k.as_str(), "mu" | "kappa") && e.is_zero() {
            return Err(usage(format!("{k} must be nonzero for family `{}`", f.family)));
        }
        values.push((k, e));
    }
    Ok(catalog::problem(&f.family, &values).expect("tag checked above"))
}

fn symmetries(f: &FamilyArgs, c: &Common) -> Run {
    let p = family_problem(f)?;
    let ansatz = AnsatzSpec::for_problem(&p, c.degree);
    let basis = find_symmetries(&p, &ansatz)?;
    let expected = catalog::generators(&p)?;
    let check = verify_table(&p, &ansatz, &basis, &expected)?;
    let names: Vec<String> = (1..=basis.dimension()).map(|i| format!("Y{i}")).collect();
    let algebra = LieAlgebra::from_fields(names, basis.generators.clone()).map(|a| identify_algebra(&a).to_string()).ok();
    let ok = check.all_contained() && check.dimensions_match;
    let report = basis.report();
    let json = json!({ "symmetries": report, "verify": check, "algebra": algebra });
    Ok((Output::symmetries(&basis, &check, algebra, json), ok))
}

fn table(f: &FamilyArgs, c: &Common, kind: TableKind) -> Run {
    let p = family_problem(f)?;
    let alg = LieAlgebra::for_problem(&p)?;
    let (cells, splits) = computed_table(&alg, kind)?;
    if !c.check {
        return Ok((Output::table(&alg, kind, &cells, &splits), true));
    }
    let specs: Vec<_> = tables_for(&f.family, kind).into_iter().filter(|s| f.params.is_empty() || !s.params.is_empty()).collect();
    if specs.is_empty() {
        return Err(usage(format!("no embedded {} table for family `{}`", render::kind_name(kind), f.family)));
    }
    let checks = specs.iter().map(|s| check_table(s)).collect::<Result<Vec<_>, _>>()?;
    let ok = checks.iter().all(|t| t.no_disagreement());
    Ok((Output::checks(checks), ok))
}

fn optimal(f: &FamilyArgs, samples: usize, c: &Common) -> Run {
    let spec = optimal_system(&f.family).ok_or_else(|| usage(format!("no embedded optimal system for `{}`", f.family)))?;
    let (alg, reps) = setup(spec)?;
    let cfg = OptimalConfig { samples, seed: c.seed, ..OptimalConfig::default() };
    let report = optimal_system_check(&alg, &reps, &cfg);
    let ok = report.coverage >= c.tol.unwrap_or(0.99);
    Ok((Output::optimal(&f.family, report), ok))
}

fn ode_json(o: &ReducedOde) -> Value {
    json!({
        "equation": o.equation.to_string(),
        "order": o.order,
        "constants": o.constants,
        "multiplier": o.multiplier.as_ref().map(|m| m.to_string()),
        "verified": o.verified,
        "provenance": o.provenance,
    })
}

fn reduce(f: &FamilyArgs, pair: &[String]) -> Run {
    let p = family_problem(f)?;
    let v1 = combination(&p, &pair[0]).map_err(|e| usage(e.to_string()))?;
    let v2 = combination(&p, &pair[1]).map_err(|e| usage(e.to_string()))?;
    let invariants = joint_invariants(&v1, &v2)?;
    let ode = reduce_by_pair(&p, &v1, &v2)?;
    let mut chain = vec![ode];
    while chain.last().is_some_and(|o| o.order >= 2) {
        match first_integral(chain.last().expect("nonempty")) {
            Ok(q) => chain.push(q),
            Err(_) => break,
        }
    }
    let ok = chain.iter().all(|o| o.verified);
    let ansatz = chain[0].ansatz.as_ref().expect("pair reductions carry an ansatz");
    let json = json!({
        "family": f.family,
        "pair": [v1.to_string(), v2.to_string()],
        "invariants": invariants.iter().map(|i| json!({ "expr": i.expr.to_string(), "role": i.role })).collect::<Vec<_>>(),
        "variable": ansatz.variable.to_string(),
        "ansatz": ansatz.u.to_string(),
        "reduced": ode_json(&chain[0]),
        "quadratures": chain[1..].iter().map(ode_json).collect::<Vec<_>>(),
    });
    Ok((Output::reduction(&chain, &invariants, json), ok))
}

fn phase(a: &PhaseArgs, format: Format) -> Run {
    if a.beta * a.beta + a.gamma * a.gamma <= 0.0 {
        return Err(usage("beta^2 + gamma^2 must be positive"));
    }
    let mut values = BTreeMap::new();
    for (k, v) in parse_assignments(&a.params)? {
        let x: f64 = v.parse().map_err(|_| usage(format!("bad numeric value for {k}: `{v}`")))?;
        values.insert(k, x);
    }
    let nonlinearity = match a.f.as_str() {
        "linear" | "qzk" => Nonlinearity::qzk(),
        tag => {
            let c = FCandidate::symbolic(tag).ok_or_else(|| usage(format!("unknown nonlinearity `{tag}`")))?;
            if matches!(tag, "power" | "exp") && values.get("mu") == Some(&0.0) {
                return Err(usage("mu must be nonzero"));
            }
            Nonlinearity::from_candidate(&c, &values).map_err(|e| usage(e.to_string()))?
        }
    };
    let mut s = PhaseSystem::new(a.beta, a.gamma, a.u1, nonlinearity);
    if a.normalized {
        s = s.normalized();
    }
    let summary = summarize(&s);
    if format != Format::Csv {
        return Ok((Output::phase(summary), true));
    }
    let ic = match &a.ic {
        Some(text) => {
            let (u, v) = text.split_once(',').ok_or_else(|| usage("--ic expects U,V"))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| usage(format!("bad initial value `{x}`")));
            (parse(u)?, parse(v)?)
        }
        None => summary
            .points
            .iter()
            .find(|p| p.class == PointClass::Centre)
            .map(|p| (p.u + 0.1, 0.0))
            .unwrap_or((0.1, 0.0)),
    };
    if a.every == 0 {
        return Err(usage("--every must be positive"));
    }
    let trajectory = s.integrate(ic, a.h, a.steps);
    Ok((Output::csv(trajectory.to_csv(a.every)), true))
}

fn verify(f: &FamilyArgs, c: &Common) -> Run {
    let _ = family_problem(f)?;
    let mut report = verify_family(&f.family, &Grid::default(), &FLOW_EPS)?;
    if let Some(tol) = c.tol {
        report.residuals.iter_mut().for_each(|r| r.pass = r.residual < tol);
        report.flows.iter_mut().for_each(|r| r.pass = r.residual < tol);
    }
    let ok = report.all_pass() && report.corruption_detected();
    Ok((Output::verify(report), ok))
}

fn classify(c: &Common) -> Run {
    let mut rows = Vec::new();
    let mut ok = true;
    for (cand, label, published, infinite) in classification_rows() {
        let p = PdeProblem::generalized(cand);
        let ansatz = AnsatzSpec::for_problem(&p, c.degree);
        let basis = find_symmetries(&p, &ansatz)?;
        let check = verify_table(&p, &ansatz, &basis, &catalog::generators(&p)?)?;
        let names: Vec<String> = (1..=basis.dimension()).map(|i| format!("Y{i}")).collect();
        let algebra = LieAlgebra::from_fields(names, basis.generators.clone())
            .map(|a| identify_algebra(&a).to_string())
            .unwrap_or_else(|e| e.to_string());
        let agree = basis.dimension() == published
            && basis.infinite_family.is_some() == infinite
            && check.all_contained()
            && check.dimensions_match;
        if c.check {
            ok &= agree;
        }
        rows.push(render::ClassRow {
            f: label.to_string(),
            family: p.family.tag().to_string(),
            dimension: basis.dimension(),
            infinite: basis.infinite_family.is_some(),
            published,
            published_infinite: infinite,
            algebra,
            status: if agree { CellStatus::Agree } else { CellStatus::Disagree },
        });
    }
    Ok((Output::classification(rows, c.check), ok))
}
