//! Published generators for each family, with corrections where the printed
//! form fails the symmetry condition.

use crate::expr::{Expr, ExprError};
use crate::prolong::{FCandidate, Family, PdeProblem, Profile, VectorField};

#[derive(Debug, Clone)]
pub struct CatalogGenerator {
    pub name: String,
    /// Generator as printed in the literature.
    pub printed: VectorField,
    /// Replacement when the printed form is not a symmetry.
    pub corrected: Option<VectorField>,
    pub note: Option<String>,
}

impl CatalogGenerator {
    /// The form that is expected to pass the symmetry condition.
    pub fn field(&self) -> &VectorField {
        self.corrected.as_ref().unwrap_or(&self.printed)
    }

    pub fn is_disputed(&self) -> bool {
        self.corrected.is_some()
    }
}

fn g(name: &str, c: [&str; 4]) -> CatalogGenerator {
    CatalogGenerator {
        name: name.to_string(),
        printed: VectorField::parse(c).expect("catalog generators parse"),
        corrected: None,
        note: None,
    }
}

fn disputed(name: &str, printed: [&str; 4], corrected: [&str; 4], note: &str) -> CatalogGenerator {
    CatalogGenerator {
        corrected: Some(VectorField::parse(corrected).expect("catalog generators parse")),
        note: Some(note.to_string()),
        ..g(name, printed)
    }
}

fn translations() -> Vec<CatalogGenerator> {
    vec![
        g("X1", ["1", "0", "0", "0"]),
        g("X2", ["0", "1", "0", "0"]),
        g("X3", ["0", "0", "1", "0"]),
    ]
}

fn qzk_list() -> Vec<CatalogGenerator> {
    let mut v = translations();
    v.push(g("X4", ["0", "0", "t", "1"]));
    v.push(disputed(
        "X5",
        ["3*t", "x", "z", "0"],
        ["3*t", "x", "z", "-2*u"],
        "printed without a u-component; the scaling weight of u is -2",
    ));
    v
}

/// Generators for a family, with the family's parameter values substituted.
pub fn generators(p: &PdeProblem) -> Result<Vec<CatalogGenerator>, ExprError> {
    let mut list = match &p.family {
        Family::Qzk | Family::Generalized(FCandidate::Linear) => qzk_list(),
        Family::Generalized(FCandidate::Arbitrary) => translations(),
        Family::Generalized(FCandidate::Const { .. }) => {
            let mut v = translations();
            v.push(g("X4A", ["0", "0", "0", "u"]));
            v.push(g("X5A", ["3*t", "x", "z + 2*u0*t", "0"]));
            v
        }
        Family::Generalized(FCandidate::Power { .. }) => {
            let mut v = translations();
            v.push(disputed(
                "X4B",
                ["3*t", "x", "z + 2*u0*t", "-u/mu"],
                ["3*t", "x", "z + 2*u0*t", "-2*u/mu"],
                "printed u-component -u/mu; the scaling weight of u is -2/mu",
            ));
            v
        }
        Family::Generalized(FCandidate::Quadratic { .. }) => {
            let mut v = translations();
            v.push(g("X4C", ["6*kappa*t", "2*kappa*x", "2*kappa*z - t + 4*u0*kappa*t", "-1 - 2*kappa*u"]));
            v
        }
        Family::Generalized(FCandidate::Exp { .. }) => {
            let mut v = translations();
            v.push(g("X4D", ["3*t", "x", "z + 2*u0*t", "-2/mu"]));
            v
        }
        Family::Generalized(FCandidate::Log { .. }) => {
            let mut v = translations();
            v.push(g("X4E", ["0", "0", "t", "u"]));
            v
        }
        Family::TimeVarying(profile) => {
            let mut v = vec![g("X2", ["0", "1", "0", "0"]), g("X3", ["0", "0", "1", "0"]), g("X4", ["0", "0", "t", "1"])];
            match profile {
                Profile::Arbitrary => {}
                Profile::Power { .. } => v.push(g("XT1", ["t", "-(p - 3*q - 2)/6*x", "(p + 1)/3*z", "(p - 2)/3*u"])),
                Profile::Exponential { .. } => v.push(g("XT2", ["1", "-(p - 3*q)/6*x", "p/3*z", "p/3*u"])),
            }
            v
        }
        Family::Custom => Vec::new(),
    };
    let values = parameter_values(&p.family);
    for gen in &mut list {
        gen.printed = substitute(&gen.printed, &values)?;
        if let Some(c) = &gen.corrected {
            gen.corrected = Some(substitute(c, &values)?);
        }
    }
    Ok(list)
}

/// Whether the family admits the infinite family `b(t,x,z) d_u`.
pub fn has_infinite_family(p: &PdeProblem) -> bool {
    matches!(p.family, Family::Generalized(FCandidate::Const { .. }))
}

fn parameter_values(f: &Family) -> Vec<(&'static str, Expr)> {
    match f {
        Family::Generalized(c) => match c {
            FCandidate::Const { u0 } | FCandidate::Log { u0 } => vec![("u0", u0.clone())],
            FCandidate::Power { mu, u0 } | FCandidate::Exp { mu, u0 } => vec![("mu", mu.clone()), ("u0", u0.clone())],
            FCandidate::Quadratic { kappa, u0 } => vec![("kappa", kappa.clone()), ("u0", u0.clone())],
            _ => vec![],
        },
        Family::TimeVarying(Profile::Power { p, q } | Profile::Exponential { p, q }) => {
            vec![("p", p.clone()), ("q", q.clone())]
        }
        _ => vec![],
    }
}

fn substitute(v: &VectorField, values: &[(&'static str, Expr)]) -> Result<VectorField, ExprError> {
    let mut out = v.clone();
    for (name, value) in values {
        if *value == Expr::param(name) {
            continue;
        }
        out = out.try_map(|e| e.subst_param(name, value))?;
    }
    Ok(out)
}

/// Families of the classification table, in table order, with symbolic
/// parameters and the published dimensions.
pub fn classification_rows() -> Vec<(FCandidate, &'static str, usize, bool)> {
    vec![
        (FCandidate::Arbitrary, "Arbitrary", 3, false),
        (FCandidate::Linear, "u", 5, false),
        (FCandidate::symbolic("const").unwrap(), "u0", 5, true),
        (FCandidate::symbolic("power").unwrap(), "u^mu + u0", 4, false),
        (FCandidate::symbolic("quadratic").unwrap(), "u + kappa*u^2 + u0", 4, false),
        (FCandidate::symbolic("exp").unwrap(), "exp(mu*u) + u0", 4, false),
        (FCandidate::symbolic("log").unwrap(), "ln(u) + u0", 4, false),
    ]
}

pub const FAMILY_TAGS: [&str; 11] =
    ["qzk", "arbitrary", "linear", "const", "power", "quadratic", "exp", "log", "tv-arbitrary", "tv-power", "tv-exp"];

/// Problem for a family tag; parameters not in `values` stay symbolic.
pub fn problem(tag: &str, values: &[(String, Expr)]) -> Option<PdeProblem> {
    let v = |n: &str| values.iter().find(|(k, _)| k == n).map(|(_, e)| e.clone()).unwrap_or_else(|| Expr::param(n));
    let f = |c: FCandidate| Some(PdeProblem::generalized(c));
    match tag {
        "qzk" => Some(PdeProblem::qzk()),
        "arbitrary" => f(FCandidate::Arbitrary),
        "linear" => f(FCandidate::Linear),
        "const" => f(FCandidate::Const { u0: v("u0") }),
        "power" => f(FCandidate::Power { mu: v("mu"), u0: v("u0") }),
        "quadratic" => f(FCandidate::Quadratic { kappa: v("kappa"), u0: v("u0") }),
        "exp" => f(FCandidate::Exp { mu: v("mu"), u0: v("u0") }),
        "log" => f(FCandidate::Log { u0: v("u0") }),
        "tv-arbitrary" => Some(PdeProblem::time_varying(Profile::Arbitrary)),
        "tv-power" => Some(PdeProblem::time_varying(Profile::Power { p: v("p"), q: v("q") })),
        "tv-exp" => Some(PdeProblem::time_varying(Profile::Exponential { p: v("p"), q: v("q") })),
        _ => None,
    }
}
