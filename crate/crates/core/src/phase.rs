//! Phase plane of the travelling-wave system
//! `U' = V`, `V' = (gamma beta^2 U - beta^2 F(U) + U1) / s`.
//!
//! `s = 1` is the unnormalized system usually quoted; the exact quadrature
//! of the reduced equation has `s = beta^2 + gamma^2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{Arg, Atom, Expr, ExprError};
use crate::prolong::FCandidate;

/// `f(U)` together with `F = ∫ f` and `G = ∫ F`.
#[derive(Debug, Clone)]
pub enum Nonlinearity {
    /// `f(U) = sum_k c[k] U^k`.
    Polynomial(Vec<f64>),
    Symbolic { f: Expr, antiderivative: Expr, second: Option<Expr>, params: BTreeMap<String, f64> },
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * u + k)
}

fn integrate_poly(c: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(c.iter().enumerate().map(|(k, a)| a / (k as f64 + 1.0))).collect()
}

impl Nonlinearity {
    /// `f(U) = U`.
    pub fn qzk() -> Self {
        Nonlinearity::Polynomial(vec![0.0, 1.0])
    }

    /// A family with numeric parameter values. Polynomial families are
    /// evaluated directly, the rest through their symbolic antiderivatives.
    pub fn from_candidate(c: &FCandidate, params: &BTreeMap<String, f64>) -> Result<Self, ExprError> {
        let get = |e: &Expr| -> Result<f64, ExprError> {
            e.eval_with(&|a| match a {
                Atom::Param(p) => params.get(p).copied(),
                _ => None,
            })
        };
        Ok(match c {
            FCandidate::Linear => Nonlinearity::qzk(),
            FCandidate::Const { u0 } => Nonlinearity::Polynomial(vec![get(u0)?]),
            FCandidate::Quadratic { kappa, u0 } => Nonlinearity::Polynomial(vec![get(u0)?, 1.0, get(kappa)?]),
            _ => {
                let f = c.f(Arg::Reduced);
                let antiderivative = f.integrate(Arg::Reduced)?;
                let second = antiderivative.integrate(Arg::Reduced).ok();
                Nonlinearity::Symbolic { f, antiderivative, second, params: params.clone() }
            }
        })
    }

    fn eval(e: &Expr, params: &BTreeMap<String, f64>, u: f64) -> f64 {
        e.eval_with(&|a| match a {
            Atom::Param(p) => params.get(p).copied(),
            Atom::Ode(0) => Some(u),
            _ => None,
        })
        .unwrap_or(f64::NAN)
    }

    pub fn f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Polynomial(c) => horner(c, u),
            Nonlinearity::Symbolic { f, params, .. } => Self::eval(f, params, u),
        }
    }

    pub fn big_f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Polynomial(c) => horner(&integrate_poly(c), u),
            Nonlinearity::Symbolic { antiderivative, params, .. } => Self::eval(antiderivative, params, u),
        }
    }

    /// `G` with `G' = F`, when it has a closed form.
    pub fn big_g(&self, u: f64) -> Option<f64> {
        match self {
            Nonlinearity::Polynomial(c) => Some(horner(&integrate_poly(&integrate_poly(c)), u)),
            Nonlinearity::Symbolic { second, params, .. } => second.as_ref().map(|g| Self::eval(g, params, u)),
        }
    }

    fn is_identity(&self) -> bool {
        matches!(self, Nonlinearity::Polynomial(c) if c.len() == 2 && c[0] == 0.0 && c[1] == 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct PhaseSystem {
    pub beta: f64,
    pub gamma: f64,
    pub u1: f64,
    pub u0: f64,
    /// Coefficient of `U''`.
    pub scale: f64,
    pub nonlinearity: Nonlinearity,
    /// Search window `|U| <= window` for stationary points.
    pub window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Centre,
    Saddle,
    Source,
    Sink,
    Degenerate,
}

impl std::fmt::Display for PointClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointClass::Centre => "centre",
            PointClass::Saddle => "saddle",
            PointClass::Source => "source",
            PointClass::Sink => "sink",
            PointClass::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub u: f64,
    pub eigenvalues: [Eigenvalue; 2],
    pub class: PointClass,
}

pub const DEGENERATE_TOL: f64 = 1e-10;

impl PhaseSystem {
    /// The unnormalized system, `s = 1`.
    pub fn new(beta: f64, gamma: f64, u1: f64, nonlinearity: Nonlinearity) -> Self {
        assert!(beta * beta + gamma * gamma > 0.0, "beta^2 + gamma^2 must be positive");
        PhaseSystem { beta, gamma, u1, u0: 0.0, scale: 1.0, nonlinearity, window: 1e3 }
    }

    pub fn qzk(beta: f64, gamma: f64, u1: f64) -> Self {
        PhaseSystem::new(beta, gamma, u1, Nonlinearity::qzk())
    }

    /// The system obtained from the exact quadrature, `s = beta^2 + gamma^2`.
    pub fn normalized(mut self) -> Self {
        self.scale = self.beta * self.beta + self.gamma * self.gamma;
        self
    }

    /// `gamma beta^2 U - beta^2 F(U) + U1`.
    pub fn force(&self, u: f64) -> f64 {
        let b2 = self.beta * self.beta;
        self.gamma * b2 * u - b2 * self.nonlinearity.big_f(u) + self.u1
    }

    fn force_slope(&self, u: f64) -> f64 {
        let b2 = self.beta * self.beta;
        self.gamma * b2 - b2 * self.nonlinearity.f(u)
    }

    pub fn rhs(&self, u: f64, v: f64) -> (f64, f64) {
        (v, self.force(u) / self.scale)
    }

    /// `H = (s/2) V^2 - (gamma beta^2/2) U^2 + beta^2 G(U) - U1 U`.
    pub fn energy(&self, u: f64, v: f64) -> Option<f64> {
        let b2 = self.beta * self.beta;
        let g = self.nonlinearity.big_g(u)?;
        Some(0.5 * self.scale * v * v - 0.5 * self.gamma * b2 * u * u + b2 * g - self.u1 * u)
    }

    /// Closed-form roots for `f(U) = U`: `gamma ± sqrt(gamma^2 + 2 U1 / beta^2)`.
    pub fn closed_form_points(&self) -> Option<Vec<f64>> {
        if !self.nonlinearity.is_identity() || self.beta == 0.0 {
            return None;
        }
        let disc = self.gamma * self.gamma + 2.0 * self.u1 / (self.beta * self.beta);
        Some(if disc < 0.0 {
            vec![]
        } else if disc == 0.0 {
            vec![self.gamma]
        } else {
            vec![self.gamma - disc.sqrt(), self.gamma + disc.sqrt()]
        })
    }

    /// Real roots of the force in the window by bracketing and bisection.
    /// Double roots are found as roots of the slope where the force vanishes.
    pub fn bracketed_roots(&self) -> Vec<f64> {
        const CELLS: usize = 20_000;
        let w = self.window;
        let mut roots = bisect_all(&|u| self.force(u), -w, w, CELLS);
        for r in bisect_all(&|u| self.force_slope(u), -w, w, CELLS) {
            if self.force(r).abs() < 1e-9 * (1.0 + self.u1.abs()) && roots.iter().all(|x| (x - r).abs() > 1e-6) {
                roots.push(r);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// Largest distance between the closed-form roots and the bracketed ones,
    /// or infinity when they disagree in number.
    pub fn closed_form_discrepancy(&self) -> Option<f64> {
        let closed: Vec<f64> = self.closed_form_points()?.into_iter().filter(|u| u.abs() <= self.window).collect();
        let found = self.bracketed_roots();
        if closed.len() != found.len() {
            return Some(f64::INFINITY);
        }
        Some(closed.iter().zip(&found).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn stationary_points(&self) -> Vec<StationaryPoint> {
        let us = match self.closed_form_points() {
            Some(closed) => closed.into_iter().filter(|u| u.abs() <= self.window).collect(),
            None => self.bracketed_roots(),
        };
        us.into_iter().map(|u| self.classify(u)).collect()
    }

    /// Linearization `[[0, 1], [c, 0]]` with `c = (gamma beta^2 - beta^2 f(U*)) / s`.
    pub fn classify(&self, u: f64) -> StationaryPoint {
        let c = self.force_slope(u) / self.scale;
        let (eigenvalues, class) = if c.abs() < DEGENERATE_TOL {
            ([Eigenvalue { re: 0.0, im: 0.0 }; 2], PointClass::Degenerate)
        } else if c > 0.0 {
            let r = c.sqrt();
            ([Eigenvalue { re: r, im: 0.0 }, Eigenvalue { re: -r, im: 0.0 }], PointClass::Saddle)
        } else {
            let w = (-c).sqrt();
            ([Eigenvalue { re: 0.0, im: w }, Eigenvalue { re: 0.0, im: -w }], PointClass::Centre)
        };
        StationaryPoint { u, eigenvalues, class }
    }

    pub fn rk4_step(&self, (u, v): (f64, f64), h: f64) -> (f64, f64) {
        let k1 = self.rhs(u, v);
        let k2 = self.rhs(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = self.rhs(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = self.rhs(u + h * k3.0, v + h * k3.1);
        (u + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
    }

    /// Fixed-step RK4 from `ic`; stops early when the orbit leaves every bounded region.
    pub fn integrate(&self, ic: (f64, f64), h: f64, n: usize) -> Trajectory {
        assert!(h > 0.0, "step must be positive");
        let mut t = Trajectory { h, y: vec![0.0], u: vec![ic.0], v: vec![ic.1], energy: vec![], diverged: false };
        let mut s = ic;
        for k in 1..=n {
            s = self.rk4_step(s, h);
            if !s.0.is_finite() || !s.1.is_finite() || s.0.abs() > 1e8 || s.1.abs() > 1e8 {
                t.diverged = true;
                break;
            }
            t.y.push(k as f64 * h);
            t.u.push(s.0);
            t.v.push(s.1);
        }
        if self.nonlinearity.big_g(0.0).is_some() {
            t.energy = t.u.iter().zip(&t.v).map(|(u, v)| self.energy(*u, *v).unwrap_or(f64::NAN)).collect();
        }
        t
    }

    /// Period from successive upward crossings of `V = 0`.
    pub fn detect_periodic(&self, ic: (f64, f64), hints: &PeriodHints) -> Option<Period> {
        let h = hints.h;
        let (du, dv) = self.rhs(ic.0, ic.1);
        if du.abs() < 1e-12 && dv.abs() < 1e-12 {
            let p = self.classify(ic.0);
            return (p.class == PointClass::Centre)
                .then(|| Period { period: 2.0 * PI / p.eigenvalues[0].im, method: PeriodMethod::Linearization });
        }
        // orbits on a saddle level take infinite time
        if let Some(h0) = self.energy(ic.0, ic.1) {
            for p in self.stationary_points().iter().filter(|p| p.class != PointClass::Centre) {
                if let Some(hs) = self.energy(p.u, 0.0) {
                    if (h0 - hs).abs() <= 1e-9 * hs.abs().max(1.0) {
                        return None;
                    }
                }
            }
        }
        let mut crossings = Vec::new();
        let mut s = ic;
        for k in 0..hints.max_steps {
            let next = self.rk4_step(s, h);
            if !next.0.is_finite() || next.0.abs() > 1e8 || next.1.abs() > 1e8 {
                return None;
            }
            if let Some(r) = hints.max_radius {
                if (next.0 - ic.0).hypot(next.1 - ic.1) > r {
                    return None;
                }
            }
            if s.1 < 0.0 && next.1 >= 0.0 {
                let frac = s.1 / (s.1 - next.1);
                crossings.push((k as f64 + frac) * h);
                if crossings.len() == 2 {
                    return Some(Period { period: crossings[1] - crossings[0], method: PeriodMethod::Section });
                }
            }
            s = next;
        }
        None
    }
}

fn bisect_all(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let w = (hi - lo) / cells as f64;
    let mut a = lo;
    let mut ga = g(a);
    for i in 1..=cells {
        let b = lo + w * i as f64;
        let gb = g(b);
        if ga == 0.0 {
            out.push(a);
        } else if ga * gb < 0.0 {
            out.push(bisect(g, a, b, ga));
        }
        a = b;
        ga = gb;
    }
    if ga == 0.0 {
        out.push(a);
    }
    out
}

fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    while b - a > 1e-12 * a.abs().max(1.0) {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub h: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Empty when `G` has no closed form.
    pub energy: Vec<f64>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `max |H - H0| / max(|H0|, 1e-300)`.
    pub fn relative_drift(&self) -> Option<f64> {
        let h0 = *self.energy.first()?;
        let worst = self.energy.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
        Some(worst / h0.abs().max(1e-300))
    }

    pub fn to_csv(&self, every: usize) -> String {
        let mut out = String::from("y,U,V,H\n");
        for i in (0..self.len()).step_by(every.max(1)) {
            let h = self.energy.get(i).copied().unwrap_or(f64::NAN);
            out.push_str(&format!("{:.9e},{:.12e},{:.12e},{:.12e}\n", self.y[i], self.u[i], self.v[i], h));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PeriodHints {
    pub h: f64,
    pub max_steps: usize,
    /// Give up once the orbit leaves this distance from the initial condition.
    pub max_radius: Option<f64>,
}

impl Default for PeriodHints {
    fn default() -> Self {
        PeriodHints { h: 1e-3, max_steps: 1_000_000, max_radius: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodMethod {
    Section,
    Linearization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Period {
    pub period: f64,
    pub method: PeriodMethod,
}

/// Status of the qualitative claims made about the two stationary points of
/// the `f(U) = U` system: the lower one a source, the upper one a centre.
#[derive(Debug, Clone, Serialize)]
pub struct ClaimCheck {
    pub claim: String,
    pub point: f64,
    pub computed: PointClass,
    pub eigenvalues: [Eigenvalue; 2],
    pub status: &'static str,
    pub note: Option<String>,
}

pub fn check_published_claims(s: &PhaseSystem) -> Vec<ClaimCheck> {
    let pts = s.stationary_points();
    let mut out = Vec::new();
    if pts.len() != 2 {
        return out;
    }
    for (p, claimed, name) in [(&pts[0], PointClass::Source, "U-"), (&pts[1], PointClass::Centre, "U+")] {
        let agree = p.class == claimed;
        out.push(ClaimCheck {
            claim: format!("{} is a {}", name, claimed),
            point: p.u,
            computed: p.class,
            eigenvalues: p.eigenvalues,
            status: if agree { "AGREE" } else { "DISPUTE" },
            note: (!agree).then(|| {
                "the Jacobian has zero trace, so sources cannot occur; a real pair of opposite eigenvalues is a saddle"
                    .to_string()
            }),
        });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSummary {
    pub beta: f64,
    pub gamma: f64,
    pub u1: f64,
    pub scale: f64,
    pub points: Vec<StationaryPoint>,
    /// Period of a small orbit around each centre.
    pub periods: Vec<Option<Period>>,
    pub claims: Vec<ClaimCheck>,
}

pub fn summarize(s: &PhaseSystem) -> PhaseSummary {
    let points = s.stationary_points();
    let periods = points
        .iter()
        .map(|p| match p.class {
            PointClass::Centre => s.detect_periodic((p.u + 1e-3, 0.0), &PeriodHints::default()),
            _ => None,
        })
        .collect();
    PhaseSummary {
        beta: s.beta,
        gamma: s.gamma,
        u1: s.u1,
        scale: s.scale,
        points,
        periods,
        claims: check_published_claims(s),
    }
}

/// Stationary points over a parameter grid `(beta, gamma, U1)`.
pub fn sweep(grid: &[(f64, f64, f64)], nonlinearity: &Nonlinearity, scale_normalized: bool) -> Vec<Vec<StationaryPoint>> {
    grid.par_iter()
        .map(|&(b, g, u1)| {
            let s = PhaseSystem::new(b, g, u1, nonlinearity.clone());
            let s = if scale_normalized { s.normalized() } else { s };
            s.stationary_points()
        })
        .collect()
}
