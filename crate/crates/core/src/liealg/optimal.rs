//! Randomized adjoint-equivalence search and optimal-system checks.
//!
//! The group element is a product of `exp(eps_i X_i)` over a permutation of
//! the basis, and its parameters are fitted by Levenberg-Marquardt from
//! random starts. The parameter of a basis element whose `ad` has real
//! eigenvalue spread `s` is confined to `|eps| <= SPREAD_BUDGET / s`, so
//! relative residuals cannot shrink merely by running off to infinity.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{adjoint, AdjointResult, LieAlgebra};
use crate::expr::{parse, Atom, Env, ExprError};

const SPREAD_BUDGET: f64 = 10.0;
const NILPOTENT_BOUND: f64 = 1.0e3;
const LM_ITERATIONS: usize = 60;

/// Tolerance for an equivalence witness.
pub const WITNESS_TOL: f64 = 1e-9;
/// Tolerance for landing on a representative family.
pub const COVERAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
enum AdForm {
    /// `(rate, power, coeff)` terms per entry.
    Closed(Vec<Vec<Vec<(f64, i32, f64)>>>),
    Numeric,
}

/// Floating-point copy of an algebra with fast adjoint matrices.
#[derive(Debug, Clone)]
pub struct NumericAlgebra {
    pub names: Vec<String>,
    ads: Vec<DMatrix<f64>>,
    forms: Vec<AdForm>,
    bounds: Vec<f64>,
}

impl NumericAlgebra {
    /// Symbolic parameters take their values from `env`.
    pub fn new(alg: &LieAlgebra, env: &Env) -> Result<Self, ExprError> {
        let n = alg.dim();
        let c = alg.numeric(env)?;
        let ads: Vec<DMatrix<f64>> = (0..n).map(|i| DMatrix::from_fn(n, n, |j, k| c[i][k][j])).collect();
        let mut forms = Vec::with_capacity(n);
        for i in 0..n {
            forms.push(match adjoint(alg, i) {
                AdjointResult::Closed(m) => {
                    let mut e = vec![vec![Vec::new(); n]; n];
                    for j in 0..n {
                        for k in 0..n {
                            for t in m.entries[j][k].terms() {
                                e[j][k].push((t.rate.eval(env)?, t.power as i32, t.coeff.eval(env)?));
                            }
                        }
                    }
                    AdForm::Closed(e)
                }
                AdjointResult::NumericOnly { .. } => AdForm::Numeric,
            });
        }
        let bounds = ads
            .iter()
            .map(|a| {
                let re: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
                let spread = re.iter().cloned().fold(f64::MIN, f64::max) - re.iter().cloned().fold(f64::MAX, f64::min);
                if spread > 1e-9 {
                    SPREAD_BUDGET / spread
                } else {
                    NILPOTENT_BOUND
                }
            })
            .collect();
        Ok(NumericAlgebra { names: alg.names.clone(), ads, forms, bounds })
    }

    pub fn dim(&self) -> usize {
        self.ads.len()
    }

    /// `Ad(exp(eps X_i)) = exp(-eps ad_{X_i})` on coefficient columns.
    pub fn adjoint(&self, i: usize, eps: f64) -> DMatrix<f64> {
        let n = self.dim();
        match &self.forms[i] {
            AdForm::Closed(e) => DMatrix::from_fn(n, n, |j, k| {
                e[j][k].iter().map(|(r, p, c)| c * eps.powi(*p) * (r * eps).exp()).sum()
            }),
            AdForm::Numeric => (&self.ads[i] * -eps).exp(),
        }
    }

    pub fn bound(&self, i: usize) -> f64 {
        self.bounds[i]
    }

    /// Image of `z` under the product in `order` (first entry applied first)
    /// and its derivatives with respect to each parameter.
    fn apply(&self, order: &[usize], eps: &[f64], z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let m = order.len();
        let mats: Vec<DMatrix<f64>> = order.iter().zip(eps).map(|(&i, &e)| self.adjoint(i, e)).collect();
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(z.clone());
        for a in &mats {
            let next = a * prefix.last().expect("nonempty");
            prefix.push(next);
        }
        let y = prefix[m].clone();
        let n = z.len();
        let mut jac = DMatrix::zeros(n, m);
        let mut suffix = DMatrix::identity(n, n);
        for l in (0..m).rev() {
            let d = -(&self.ads[order[l]] * &prefix[l + 1]);
            jac.set_column(l, &(&suffix * d));
            suffix = &suffix * &mats[l];
        }
        (y, jac)
    }

    pub fn map(&self, order: &[usize], eps: &[f64], z: &[f64]) -> Vec<f64> {
        self.apply(order, eps, &DVector::from_column_slice(z)).0.iter().cloned().collect()
    }
}

/// Box-constrained Levenberg-Marquardt; returns the parameters and the final residual norm.
fn levenberg_marquardt(
    f: &dyn Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
    x0: Vec<f64>,
    bounds: &[f64],
    target: f64,
) -> (Vec<f64>, f64) {
    let mut x = x0;
    let (mut r, mut j) = f(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut stall = 0;
    for _ in 0..LM_ITERATIONS {
        if cost.sqrt() < target * 1e-3 {
            break;
        }
        let jt = j.transpose();
        let h = &jt * &j;
        let g = &jt * &r;
        let mut damped = h.clone();
        for i in 0..x.len() {
            damped[(i, i)] += lambda * (h[(i, i)] + 1e-12);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-g))) else {
            lambda *= 10.0;
            continue;
        };
        let trial: Vec<f64> = x.iter().zip(step.iter()).zip(bounds).map(|((a, d), b)| (a + d).clamp(-b, *b)).collect();
        let (r2, j2) = f(&trial);
        let c2 = r2.norm_squared();
        if c2.is_finite() && c2 < cost {
            let gain = (cost - c2) / cost.max(1e-300);
            x = trial;
            r = r2;
            j = j2;
            cost = c2;
            lambda = (lambda / 3.0).max(1e-12);
            stall = if gain < 1e-6 { stall + 1 } else { 0 };
        } else {
            lambda *= 4.0;
            stall += 1;
        }
        if stall > 8 || lambda > 1e12 {
            break;
        }
    }
    (x, cost.sqrt())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Witness {
    /// Basis indices in the order the adjoint maps are applied.
    pub order: Vec<usize>,
    pub eps: Vec<f64>,
    /// `Ad(g) z = scale * w`.
    pub scale: f64,
    pub error: f64,
    pub trial: usize,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

fn start(alg: &NumericAlgebra, trial: usize, seed: u64) -> (Vec<usize>, Vec<f64>) {
    let n = alg.dim();
    let mut order: Vec<usize> = (0..n).collect();
    if trial == 0 {
        return (order, vec![0.0; n]);
    }
    let mut rng = trial_rng(seed, trial);
    order.shuffle(&mut rng);
    let eps = order.iter().map(|&i| rng.gen_range(-1.0..1.0) * alg.bound(i).min(3.0)).collect();
    (order, eps)
}

/// Searches for `g` with `Ad(g) z` proportional to `w`. Trial 0 starts at
/// the identity; the rest start from seeded random points.
pub fn adjoint_equivalent(alg: &NumericAlgebra, z: &[f64], w: &[f64], trials: usize, seed: u64) -> Option<Witness> {
    let zv = DVector::from_column_slice(z);
    let wv = DVector::from_column_slice(w);
    let wn = wv.norm();
    if wn == 0.0 || zv.norm() == 0.0 {
        return None;
    }
    let what = &wv / wn;
    let proj = DMatrix::identity(w.len(), w.len()) - &what * what.transpose();
    (0..trials).into_par_iter().find_map_first(|t| {
        let (order, x0) = start(alg, t, seed);
        let bounds: Vec<f64> = order.iter().map(|&i| alg.bound(i)).collect();
        let f = |x: &[f64]| {
            let (y, jy) = alg.apply(&order, x, &zv);
            let yn = y.norm();
            let yhat = &y / yn;
            let dproj = (DMatrix::identity(y.len(), y.len()) - &yhat * yhat.transpose()) / yn;
            (&proj * &yhat, &proj * dproj * jy)
        };
        let (x, _) = levenberg_marquardt(&f, x0, &bounds, WITNESS_TOL);
        let (y, _) = alg.apply(&order, &x, &zv);
        let scale = y.dot(&wv) / (wn * wn);
        if scale.abs() < 1e-300 {
            return None;
        }
        let error = (&y / scale - &wv).norm() / wn.max(1.0);
        (error < WITNESS_TOL).then(|| Witness { order, eps: x, scale, error, trial: t })
    })
}

/// One-dimensional subalgebra family `X_lead + sum c_k X_k + sum alpha X_j`.
#[derive(Debug, Clone, Serialize)]
pub struct Representative {
    pub label: String,
    pub fixed: Vec<(usize, f64)>,
    pub free: Vec<(usize, String)>,
}

impl Representative {
    pub fn parse(label: &str, names: &[String]) -> Result<Self, String> {
        let e = parse(label).map_err(|err| err.to_string())?;
        let mut fixed = Vec::new();
        let mut free = Vec::new();
        for (m, c) in e.terms() {
            let mut index = None;
            let mut slot = None;
            for (a, k) in m.factors() {
                let Atom::Param(p) = a else { return Err(format!("unexpected factor {} in {}", a, label)) };
                if !k.is_integer() || k.to_integer() != 1.into() {
                    return Err(format!("nonlinear term in {}", label));
                }
                match names.iter().position(|n| n == p) {
                    Some(i) if index.is_none() => index = Some(i),
                    Some(_) => return Err(format!("product of basis elements in {}", label)),
                    None if slot.is_none() => slot = Some(p.clone()),
                    None => return Err(format!("several free parameters in one term of {}", label)),
                }
            }
            let i = index.ok_or_else(|| format!("term without a basis element in {}", label))?;
            match slot {
                Some(s) => free.push((i, s)),
                None => fixed.push((i, crate::expr::rational_to_f64(c))),
            }
        }
        if fixed.is_empty() {
            return Err(format!("{} has no fixed leading term", label));
        }
        fixed.sort_by_key(|(i, _)| *i);
        free.sort_by_key(|(i, _)| *i);
        Ok(Representative { label: label.to_string(), fixed, free })
    }

    fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.fixed.iter().map(|(i, _)| *i).chain(self.free.iter().map(|(i, _)| *i)).collect();
        s.sort();
        s
    }

    pub fn element(&self, dim: usize, values: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for (i, c) in &self.fixed {
            v[*i] = *c;
        }
        for ((i, _), a) in self.free.iter().zip(values) {
            v[*i] = *a;
        }
        v
    }
}

/// Searches for `g` with `Ad(g) z` in the family, up to scaling. With
/// `strict`, the free coefficients of the image must be nonzero.
pub fn lands_in(
    alg: &NumericAlgebra,
    z: &[f64],
    rep: &Representative,
    trials: usize,
    seed: u64,
    tol: f64,
    strict: bool,
) -> Option<(Witness, Vec<f64>)> {
    let n = alg.dim();
    let zv = DVector::from_column_slice(z);
    let (lead, lead_c) = rep.fixed[0];
    let targets: Vec<(usize, f64)> = (0..n)
        .filter(|&k| k != lead && !rep.free.iter().any(|(i, _)| *i == k))
        .map(|k| (k, rep.fixed.iter().find(|(i, _)| *i == k).map(|(_, c)| c / lead_c).unwrap_or(0.0)))
        .collect();
    (0..trials).into_par_iter().find_map_first(|t| {
        let (order, x0) = start(alg, t, seed);
        let bounds: Vec<f64> = order.iter().map(|&i| alg.bound(i)).collect();
        let f = |x: &[f64]| {
            let (y, jy) = alg.apply(&order, x, &zv);
            let yl = y[lead];
            let mut r = DVector::zeros(targets.len());
            let mut jr = DMatrix::zeros(targets.len(), x.len());
            for (row, (k, c)) in targets.iter().enumerate() {
                r[row] = y[*k] / yl - c;
                for col in 0..x.len() {
                    jr[(row, col)] = (jy[(*k, col)] * yl - y[*k] * jy[(lead, col)]) / (yl * yl);
                }
            }
            (r, jr)
        };
        let (x, res) = levenberg_marquardt(&f, x0, &bounds, tol);
        let (y, _) = alg.apply(&order, &x, &zv);
        let yl = y[lead];
        if !(res < tol) || yl.abs() < 1e-8 * y.norm() {
            return None;
        }
        let params: Vec<f64> = rep.free.iter().map(|(i, _)| y[*i] / yl * lead_c).collect();
        if strict && params.iter().any(|a| a.abs() < 1e-3) {
            return None;
        }
        let scale = yl / lead_c;
        Some((Witness { order, eps: x, scale, error: res, trial: t }, params))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageFailure {
    pub sample: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationException {
    pub from: String,
    pub values: Vec<f64>,
    pub to: String,
    pub image_parameters: Vec<f64>,
    pub witness: Witness,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalReport {
    pub samples: usize,
    pub covered: usize,
    pub coverage: f64,
    /// Number of samples first landing in each family.
    pub hits: Vec<(String, usize)>,
    pub uncovered: Vec<CoverageFailure>,
    pub separation_checks: usize,
    pub exceptions: Vec<SeparationException>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct OptimalConfig {
    pub samples: usize,
    pub trials_per_family: usize,
    pub separation_samples: usize,
    pub separation_trials: usize,
    pub seed: u64,
}

impl Default for OptimalConfig {
    fn default() -> Self {
        OptimalConfig { samples: 500, trials_per_family: 6, separation_samples: 2, separation_trials: 12, seed: 1 }
    }
}

const GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

/// Sparse sample: each coordinate is zero with probability 1/2, otherwise
/// uniform in +-[0.1, 2].
fn sample_element(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    0.0
                } else {
                    let m: f64 = rng.gen_range(0.1..2.0);
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                }
            })
            .collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

pub fn optimal_system_check(alg: &NumericAlgebra, reps: &[Representative], cfg: &OptimalConfig) -> OptimalReport {
    let n = alg.dim();
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by_key(|&i| (reps[i].support().len(), i));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<Vec<f64>> = (0..cfg.samples).map(|_| sample_element(&mut rng, n)).collect();
    let mut hits = vec![0usize; reps.len()];
    let mut uncovered = Vec::new();
    for (s, z) in samples.iter().enumerate() {
        let found = order.iter().find(|&&i| {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((s * reps.len() + i) as u64);
            lands_in(alg, z, &reps[i], cfg.trials_per_family, seed, COVERAGE_TOL, false).is_some()
        });
        match found {
            Some(&i) => hits[i] += 1,
            None => uncovered.push(CoverageFailure { sample: z.clone() }),
        }
    }
    let covered = cfg.samples - uncovered.len();
    let mut exceptions = Vec::new();
    let mut checks = 0;
    for (i, a) in reps.iter().enumerate() {
        for s in 0..cfg.separation_samples {
            let values: Vec<f64> = a.free.iter().map(|_| *GRID.choose(&mut rng).expect("nonempty grid")).collect();
            let z = a.element(n, &values);
            for (j, b) in reps.iter().enumerate() {
                if i == j {
                    continue;
                }
                checks += 1;
                let seed = cfg.seed ^ ((i * 7919 + j * 104_729 + s) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                if let Some((w, params)) = lands_in(alg, &z, b, cfg.separation_trials, seed, WITNESS_TOL, true) {
                    exceptions.push(SeparationException {
                        from: a.label.clone(),
                        values: values.clone(),
                        to: b.label.clone(),
                        image_parameters: params,
                        witness: w,
                    });
                }
            }
        }
    }
    OptimalReport {
        samples: cfg.samples,
        covered,
        coverage: if cfg.samples == 0 { 1.0 } else { covered as f64 / cfg.samples as f64 },
        hits: reps.iter().zip(hits).map(|(r, h)| (r.label.clone(), h)).collect(),
        uncovered,
        separation_checks: checks,
        exceptions,
        seed: cfg.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::tests::qzk_algebra;

    fn qzk() -> NumericAlgebra {
        NumericAlgebra::new(&qzk_algebra(), &Env::new()).unwrap()
    }

    #[test]
    fn translation_witness() {
        let a = qzk();
        let w = adjoint_equivalent(&a, &[0.0, 0.0, 5.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0, 0.0], 50, 3).unwrap();
        let img = a.map(&w.order, &w.eps, &[0.0, 0.0, 5.0, 1.0, 0.0]);
        assert!((img[2]).abs() < 1e-9 && (img[3] - w.scale).abs() < 1e-9);
    }

    #[test]
    fn identity_witness() {
        let a = qzk();
        let z = [1.0, 2.0, 0.0, -1.0, 0.5];
        let w = adjoint_equivalent(&a, &z, &z, 5, 1).unwrap();
        assert_eq!(w.trial, 0);
        assert!(w.eps.iter().all(|e| *e == 0.0));
        assert!((w.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn different_orbits_not_found() {
        let a = qzk();
        assert!(adjoint_equivalent(&a, &[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0], 300, 9).is_none());
    }

    #[test]
    fn parse_representatives() {
        let names: Vec<String> = ["X1", "X2", "X3"].iter().map(|s| s.to_string()).collect();
        let r = Representative::parse("X1 + alpha*X3", &names).unwrap();
        assert_eq!(r.fixed, vec![(0, 1.0)]);
        assert_eq!(r.free, vec![(2, "alpha".to_string())]);
        assert!(Representative::parse("alpha*beta*X1", &names).is_err());
    }
}

/// Numeric algebra and parsed representatives for an embedded list.
/// Parameters not fixed by the list are set to 1.
pub fn setup(spec: &super::tables::OptimalSpec) -> Result<(NumericAlgebra, Vec<Representative>), String> {
    let values = super::tables::parse_params(&spec.params).map_err(|e| e.to_string())?;
    let p = crate::catalog::problem(&spec.family, &values).ok_or_else(|| format!("unknown family {}", spec.family))?;
    let alg = LieAlgebra::for_problem(&p).map_err(|e| e.to_string())?;
    let mut env = Env::new();
    for name in alg.params() {
        env.set_param(&name, 1.0);
    }
    let na = NumericAlgebra::new(&alg, &env).map_err(|e| e.to_string())?;
    let names: Vec<String> = alg
        .names
        .iter()
        .map(|n| spec.aliases.iter().find(|(_, to)| *to == n).map(|(from, _)| from.clone()).unwrap_or_else(|| n.clone()))
        .collect();
    let reps = spec.representatives.iter().map(|r| Representative::parse(r, &names)).collect::<Result<_, _>>()?;
    Ok((na, reps))
}
