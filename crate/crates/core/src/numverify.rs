//! Grid checks: residuals of candidate solutions and of their images under
//! symmetry flows, and a travelling-wave consistency check.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalog;
use crate::expr::{Atom, DerivativeIndex, Env, Expr, ExprError, Var};
use crate::flow::{AffineFlow, FlowError};
use crate::phase::PhaseSystem;
use crate::prolong::{PdeProblem, VectorField};
use crate::reduce::{closed_form_solutions, pde_residual};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("grid needs at least 5 samples per axis, got {0}")]
    TooCoarse(usize),
    #[error("every grid point is excluded")]
    Empty,
    #[error("non-finite value at (t, x, z) = ({0}, {1}, {2})")]
    Singular(f64, f64, f64),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub ranges: [(f64, f64); 3],
    pub counts: [usize; 3],
    /// Points where candidate solutions may be singular.
    pub exclude: Option<fn(f64, f64, f64) -> bool>,
}

fn near_t_zero(t: f64, _: f64, _: f64) -> bool {
    t.abs() < 1e-9
}

impl Default for Grid {
    /// `t` in [1, 2], `x, z` in [-1, 1], 17 points per axis.
    fn default() -> Self {
        Grid { ranges: [(1.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)], counts: [17; 3], exclude: Some(near_t_zero) }
    }
}

impl Grid {
    pub fn new(ranges: [(f64, f64); 3], counts: [usize; 3]) -> Result<Self, VerifyError> {
        let g = Grid { ranges, counts, exclude: Some(near_t_zero) };
        g.points()?;
        Ok(g)
    }

    pub fn points(&self) -> Result<Vec<[f64; 3]>, VerifyError> {
        if let Some(&n) = self.counts.iter().find(|&&n| n < 5) {
            return Err(VerifyError::TooCoarse(n));
        }
        let axis = |i: usize| -> Vec<f64> {
            let (a, b) = self.ranges[i];
            let n = self.counts[i];
            (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
        };
        let (ts, xs, zs) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(ts.len() * xs.len() * zs.len());
        for &t in &ts {
            for &x in &xs {
                for &z in &zs {
                    if !self.exclude.is_some_and(|f| f(t, x, z)) {
                        out.push([t, x, z]);
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(VerifyError::Empty);
        }
        Ok(out)
    }
}

/// Deterministic generic values for every parameter that `values` leaves open.
pub fn fill_parameters(exprs: &[&Expr], values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out = values.clone();
    let mut names = std::collections::BTreeSet::new();
    for e in exprs {
        collect_params(e, &mut names);
    }
    for (k, name) in names.into_iter().enumerate() {
        out.entry(name).or_insert(0.7 + 0.13 * k as f64);
    }
    out
}

fn collect_params(e: &Expr, names: &mut std::collections::BTreeSet<String>) {
    for a in e.atoms() {
        match a {
            Atom::Param(p) => {
                names.insert(p);
            }
            Atom::Exp(arg) => collect_params(&arg, names),
            _ => {}
        }
    }
}

/// Maximum of `|e|` over the grid.
pub fn max_abs(e: &Expr, grid: &Grid, params: &BTreeMap<String, f64>) -> Result<f64, VerifyError> {
    let points = grid.points()?;
    let values: Vec<Result<f64, VerifyError>> = points
        .par_iter()
        .map(|&[t, x, z]| {
            let v = e.eval_with(&|a| match a {
                Atom::Var(Var::T) => Some(t),
                Atom::Var(Var::X) => Some(x),
                Atom::Var(Var::Z) => Some(z),
                Atom::Param(p) => params.get(p).copied(),
                _ => None,
            })?;
            if v.is_finite() {
                Ok(v.abs())
            } else {
                Err(VerifyError::Singular(t, x, z))
            }
        })
        .collect();
    values.into_iter().try_fold(0.0, |m, v| Ok(f64::max(m, v?)))
}

/// Max `|lhs|` of `u = sol(t, x, z)` on the grid, derivatives taken symbolically.
pub fn residual(sol: &Expr, p: &PdeProblem, grid: &Grid, params: &BTreeMap<String, f64>) -> Result<f64, VerifyError> {
    let r = pde_residual(p, sol)?;
    let params = fill_parameters(&[sol, &p.lhs], params);
    max_abs(&r, grid, &params)
}

/// Residual of the image of `sol` under `exp(eps v)`.
///
/// With `P = A Q + c` the flow of (t, x, z) and `u -> m u + l(Q)` that of u,
/// the image is `m sol(Q) + l(Q)` at `Q = A^-1 (P - c)`. Its jets are the
/// symbolic partials of `sol` pushed through `A^-1`, so no differencing and no
/// rational functions beyond those of `sol` appear.
pub fn flow_check(
    v: &VectorField,
    sol: &Expr,
    p: &PdeProblem,
    eps: f64,
    grid: &Grid,
    params: &BTreeMap<String, f64>,
) -> Result<f64, VerifyError> {
    let flow = AffineFlow::new(v)?;
    if !flow.is_projectable() {
        return Err(FlowError::Unsupported(v.to_string(), "the flow of (t, x, z) depends on u".into()).into());
    }
    let params = fill_parameters(&[sol, &p.lhs, v.component(0), v.component(1), v.component(2), v.component(3)], params);
    let mut env = Env::new();
    for (k, val) in &params {
        env.set_param(k, *val);
    }
    let m = flow.eval(eps, &env)?;
    let a = m.view((0, 0), (3, 3)).into_owned();
    let shift = m.view((0, 4), (3, 1)).into_owned();
    let n = a.try_inverse().ok_or_else(|| VerifyError::Singular(f64::NAN, f64::NAN, f64::NAN))?;
    let scale = m[(3, 3)];
    let linear = [m[(3, 0)], m[(3, 1)], m[(3, 2)]];

    // Each P-jet as a combination of Q-jets.
    let jets: Vec<DerivativeIndex> = p
        .lhs
        .atoms()
        .into_iter()
        .filter_map(|a| match a {
            Atom::Jet(j) => Some(j),
            _ => None,
        })
        .collect();
    let mut needed = BTreeMap::new();
    let mut expansions = Vec::new();
    for j in &jets {
        let mut op: BTreeMap<[u32; 3], f64> = BTreeMap::from([([0, 0, 0], 1.0)]);
        for (i, times) in [j.t, j.x, j.z].into_iter().enumerate() {
            for _ in 0..times {
                let mut next = BTreeMap::new();
                for (alpha, c) in &op {
                    for q in 0..3 {
                        let w = n[(q, i)];
                        if w != 0.0 {
                            let mut beta = *alpha;
                            beta[q] += 1;
                            *next.entry(beta).or_insert(0.0) += c * w;
                        }
                    }
                }
                op = next;
            }
        }
        for alpha in op.keys() {
            if !needed.contains_key(alpha) {
                let mut d = sol.clone();
                for (q, var) in [Var::T, Var::X, Var::Z].into_iter().enumerate() {
                    for _ in 0..alpha[q] {
                        d = d.partial(&Atom::Var(var))?;
                    }
                }
                needed.insert(*alpha, d);
            }
        }
        expansions.push((*j, op));
    }

    let points = grid.points()?;
    let values: Vec<Result<f64, VerifyError>> = points
        .par_iter()
        .map(|&pt| {
            let mut q = [0.0; 3];
            for (r, qr) in q.iter_mut().enumerate() {
                *qr = (0..3).map(|c| n[(r, c)] * (pt[c] - shift[c])).sum();
            }
            // the image is singular where the preimage is
            if grid.exclude.is_some_and(|f| f(q[0], q[1], q[2])) {
                return Ok(0.0);
            }
            let at_q = |a: &Atom| match a {
                Atom::Var(Var::T) => Some(q[0]),
                Atom::Var(Var::X) => Some(q[1]),
                Atom::Var(Var::Z) => Some(q[2]),
                Atom::Param(name) => params.get(name).copied(),
                _ => None,
            };
            let mut qjets = BTreeMap::new();
            for (alpha, d) in &needed {
                let mut w = scale * d.eval_with(&at_q)?;
                match alpha.iter().sum::<u32>() {
                    0 => w += m[(3, 4)] + (0..3).map(|i| linear[i] * q[i]).sum::<f64>(),
                    1 => w += (0..3).map(|i| linear[i] * alpha[i] as f64).sum::<f64>(),
                    _ => {}
                }
                qjets.insert(*alpha, w);
            }
            let mut pjets = BTreeMap::new();
            for (j, op) in &expansions {
                pjets.insert(*j, op.iter().map(|(alpha, c)| c * qjets[alpha]).sum::<f64>());
            }
            let r = p.lhs.eval_with(&|a| match a {
                Atom::Var(Var::T) => Some(pt[0]),
                Atom::Var(Var::X) => Some(pt[1]),
                Atom::Var(Var::Z) => Some(pt[2]),
                Atom::Param(name) => params.get(name).copied(),
                Atom::Jet(j) => pjets.get(j).copied(),
                _ => None,
            })?;
            if r.is_finite() {
                Ok(r.abs())
            } else {
                Err(VerifyError::Singular(pt[0], pt[1], pt[2]))
            }
        })
        .collect();
    values.into_iter().try_fold(0.0, |acc, v| Ok(f64::max(acc, v?)))
}

/// Largest entry of the difference between the closed-form flow matrix and
/// nalgebra's matrix exponential of the generator.
pub fn matrix_discrepancy(v: &VectorField, eps: f64, params: &BTreeMap<String, f64>) -> Result<f64, VerifyError> {
    let flow = AffineFlow::new(v)?;
    let params = fill_parameters(&v.components(), params);
    let mut env = Env::new();
    for (k, val) in &params {
        env.set_param(k, *val);
    }
    let closed = flow.eval(eps, &env)?;
    let numeric = (flow.generator(&env)? * eps).exp();
    Ok((closed - numeric).amax())
}

/// `v` with component `k` scaled by 11/10.
pub fn corrupt(v: &VectorField, k: usize) -> VectorField {
    let mut w = v.clone();
    *w.component_mut(k) = v.component(k).scale(&BigRational::new(11.into(), 10.into()));
    w
}

/// One corruption per nonzero component.
pub fn corruptions(v: &VectorField) -> Vec<VectorField> {
    (0..4).filter(|&k| !v.component(k).is_zero()).map(|k| corrupt(v, k)).collect()
}

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const FLOW_TOL: f64 = 1e-9;
pub const FLOW_EPS: [f64; 4] = [-1.0, -0.1, 0.1, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct ResidualCheck {
    pub solution: String,
    pub name: String,
    pub family: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowCheck {
    pub solution: String,
    pub family: String,
    pub generator: String,
    pub field: String,
    pub eps: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub family: String,
    pub grid_points: usize,
    pub parameters: BTreeMap<String, f64>,
    pub residuals: Vec<ResidualCheck>,
    pub flows: Vec<FlowCheck>,
    pub corrupted: Vec<FlowCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.residuals.iter().all(|r| r.pass) && self.flows.iter().all(|f| f.pass)
    }

    /// True when some corrupted generator breaks some solution.
    pub fn corruption_detected(&self) -> bool {
        self.corrupted.is_empty() || self.corrupted.iter().any(|c| c.residual > 1e-3)
    }
}

/// Every catalog solution of the family against every published generator.
pub fn verify_family(tag: &str, grid: &Grid, eps_values: &[f64]) -> Result<VerifyReport, VerifyError> {
    let p = catalog::problem(tag, &[]).ok_or_else(|| VerifyError::UnknownFamily(tag.to_string()))?;
    let sols: Vec<_> = closed_form_solutions().into_iter().filter(|s| s.family == tag).collect();
    let gens = catalog::generators(&p)?;
    let mut all: Vec<&Expr> = vec![&p.lhs];
    all.extend(sols.iter().map(|s| &s.solution));
    for g in &gens {
        all.extend(g.field().components());
    }
    let params = fill_parameters(&all, &BTreeMap::new());
    let mut report = VerifyReport {
        family: tag.to_string(),
        grid_points: grid.points()?.len(),
        parameters: params.clone(),
        residuals: Vec::new(),
        flows: Vec::new(),
        corrupted: Vec::new(),
    };
    for s in &sols {
        let r = residual(&s.solution, &p, grid, &params)?;
        report.residuals.push(ResidualCheck {
            solution: s.solution.to_string(),
            name: s.name.to_string(),
            family: tag.to_string(),
            residual: r,
            pass: r < RESIDUAL_TOL,
        });
        for g in &gens {
            let fields = std::iter::once((g.field().clone(), true)).chain(corruptions(g.field()).into_iter().map(|c| (c, false)));
            for (field, genuine) in fields {
                let (out, tol) = if genuine { (&mut report.flows, FLOW_TOL) } else { (&mut report.corrupted, f64::INFINITY) };
                for &eps in eps_values {
                    let r = flow_check(&field, &s.solution, &p, eps, grid, &params)?;
                    out.push(FlowCheck {
                        solution: s.solution.to_string(),
                        family: tag.to_string(),
                        generator: g.name.clone(),
                        field: field.to_string(),
                        eps,
                        residual: r,
                        pass: r < tol,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Piecewise quintic through six neighbouring samples of `U`. Only values are
/// used: the RK4 errors in `U` and `U'` are not derivatives of each other.
struct Quintic<'a> {
    h: f64,
    u: &'a [f64],
    /// Lagrange basis on nodes -2..=3 as coefficients in `s`.
    basis: [[f64; 6]; 6],
}

impl<'a> Quintic<'a> {
    fn new(h: f64, u: &'a [f64]) -> Self {
        let mut basis = [[0.0; 6]; 6];
        for (j, b) in basis.iter_mut().enumerate() {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for m in 0..6 {
                if m == j {
                    continue;
                }
                let node = m as f64 - 2.0;
                let mut next = vec![0.0; poly.len() + 1];
                for (i, c) in poly.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * node;
                }
                poly = next;
                denom *= j as f64 - m as f64;
            }
            for (i, c) in poly.iter().enumerate() {
                b[i] = c / denom;
            }
        }
        Quintic { h, u, basis }
    }

    /// Value and first and third derivatives at `y`.
    fn eval(&self, y: f64) -> (f64, f64, f64) {
        let k = ((y / self.h).floor() as usize).clamp(2, self.u.len() - 4);
        let s = y / self.h - k as f64;
        let mut c = [0.0; 6];
        for (j, b) in self.basis.iter().enumerate() {
            let w = self.u[k + j - 2];
            for i in 0..6 {
                c[i] += w * b[i];
            }
        }
        let h = self.h;
        let value = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        let first = (c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])))) / h;
        let third = (6.0 * c[3] + s * (24.0 * c[4] + s * 60.0 * c[5])) / (h * h * h);
        (value, first, third)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveCheck {
    pub h: f64,
    pub residual: f64,
}

/// Residual of `u = U(z - gamma t + (gamma/beta) x)` for the `f(U) = U`
/// equation, with `U` an RK4 orbit of the exact quadrature
/// `(beta^2 + gamma^2) U'' = gamma beta^2 U - beta^2 U^2/2 + U1`, interpolated
/// by local quintics.
pub fn travelling_wave_residual(
    beta: f64,
    gamma: f64,
    u1: f64,
    ic: (f64, f64),
    h: f64,
    grid: &Grid,
) -> Result<WaveCheck, VerifyError> {
    let sys = PhaseSystem::qzk(beta, gamma, u1).normalized();
    let points = grid.points()?;
    let ys: Vec<f64> = points.iter().map(|&[t, x, z]| z - gamma * t + gamma / beta * x).collect();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = ((hi - lo) / h).ceil() as usize + 6;
    let orbit = sys.integrate(ic, h, n);
    if orbit.diverged {
        return Err(VerifyError::Singular(f64::NAN, f64::NAN, f64::NAN));
    }
    let spline = Quintic::new(h, &orbit.u);
    let k = (beta * beta + gamma * gamma) / (beta * beta);
    let worst = ys
        .par_iter()
        .map(|y| {
            let (u, du, d3u) = spline.eval(y - lo + 2.0 * h);
            (k * d3u - (gamma - u) * du).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(WaveCheck { h, residual: worst })
}

/// Residuals for successively halved steps and the observed order of the last halving.
pub fn travelling_wave_convergence(
    beta: f64,
    gamma: f64,
    u1: f64,
    ic: (f64, f64),
    steps: &[f64],
    grid: &Grid,
) -> Result<(Vec<WaveCheck>, f64), VerifyError> {
    let checks = steps
        .iter()
        .map(|&h| travelling_wave_residual(beta, gamma, u1, ic, h, grid))
        .collect::<Result<Vec<_>, _>>()?;
    let order = match checks.as_slice() {
        [.., a, b] => (a.residual / b.residual).ln() / (a.h / b.h).ln(),
        _ => f64::NAN,
    };
    Ok((checks, order))
}

