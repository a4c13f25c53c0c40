use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use symmetra::phase::{
    check_published_claims, summarize, sweep, Nonlinearity, PeriodHints, PeriodMethod, PhaseSystem, PointClass,
};
use symmetra::prolong::FCandidate;

fn base() -> PhaseSystem {
    PhaseSystem::qzk(1.0, 1.0, 0.0)
}

#[test]
fn stationary_points_of_the_base_case() {
    let s = base();
    let pts = s.stationary_points();
    assert_eq!(pts.len(), 2);
    assert!((pts[0].u - 0.0).abs() < 1e-10);
    assert!((pts[1].u - 2.0).abs() < 1e-10);
    assert!(s.closed_form_discrepancy().unwrap() < 1e-10);
}

#[test]
fn no_real_points_and_double_root() {
    // roots are gamma ± sqrt(gamma^2 + 2 U1 / beta^2)
    assert!(PhaseSystem::qzk(1.0, 0.0, -1.0).stationary_points().is_empty());
    assert!(PhaseSystem::qzk(1.0, 0.0, -1.0).bracketed_roots().is_empty());
    let s = PhaseSystem::qzk(1.0, 1.0, -0.5);
    let pts = s.stationary_points();
    assert_eq!(pts.len(), 1);
    assert!((pts[0].u - 1.0).abs() < 1e-10);
    assert_eq!(pts[0].class, PointClass::Degenerate);
    let found = s.bracketed_roots();
    assert_eq!(found.len(), 1);
    assert!((found[0] - 1.0).abs() < 1e-6);
}

#[test]
fn classification_eigenvalues() {
    let pts = base().stationary_points();
    assert_eq!(pts[0].class, PointClass::Saddle);
    assert!((pts[0].eigenvalues[0].re - 1.0).abs() < 1e-10 && (pts[0].eigenvalues[1].re + 1.0).abs() < 1e-10);
    assert_eq!(pts[1].class, PointClass::Centre);
    assert!((pts[1].eigenvalues[0].im - 1.0).abs() < 1e-10 && (pts[1].eigenvalues[1].im + 1.0).abs() < 1e-10);
    assert!(pts[1].eigenvalues.iter().all(|e| e.re == 0.0));
}

#[test]
fn energy_is_conserved() {
    let t = base().integrate((2.1, 0.0), 1e-3, 100_000);
    assert!(!t.diverged);
    assert_eq!(t.len(), 100_001);
    assert!(t.relative_drift().unwrap() < 1e-8);
    assert!(t.u.iter().all(|u| u.abs() < 3.0));
}

#[test]
fn stationary_initial_condition_stays_put() {
    let t = base().integrate((2.0, 0.0), 1e-3, 1000);
    assert!(t.u.iter().all(|u| *u == 2.0) && t.v.iter().all(|v| *v == 0.0));
}

#[test]
fn unstable_direction_diverges() {
    // unstable eigenvector of the saddle at 0 is (1, 1); go along -(1, 1)
    let t = base().integrate((-0.5, -0.5), 1e-3, 100_000);
    assert!(t.diverged);
}

#[test]
fn small_orbit_period() {
    let p = base().detect_periodic((2.01, 0.0), &PeriodHints::default()).unwrap();
    assert_eq!(p.method, PeriodMethod::Section);
    assert!((p.period - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "{}", p.period);
}

#[test]
fn separatrix_has_no_period() {
    // H(3, 0) = H(0, 0) = 0: the homoclinic orbit of the saddle
    assert!(base().detect_periodic((3.0, 0.0), &PeriodHints::default()).is_none());
}

#[test]
fn centre_itself_reports_linearized_period() {
    let p = base().detect_periodic((2.0, 0.0), &PeriodHints::default()).unwrap();
    assert_eq!(p.method, PeriodMethod::Linearization);
    assert!((p.period - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn source_claim_is_a_dispute() {
    let claims = check_published_claims(&base());
    assert_eq!(claims.len(), 2);
    assert_eq!(claims[0].status, "DISPUTE");
    assert_eq!(claims[0].computed, PointClass::Saddle);
    assert_eq!(claims[1].status, "AGREE");
    let summary = summarize(&base());
    assert!(summary.periods[1].is_some());
}

#[test]
fn normalized_system_rescales_eigenvalues() {
    let s = base().normalized();
    assert_eq!(s.scale, 2.0);
    let pts = s.stationary_points();
    assert!((pts[0].eigenvalues[0].re - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn non_polynomial_family_uses_bracketing() {
    let mut params = BTreeMap::new();
    params.insert("mu".to_string(), 1.0);
    params.insert("u0".to_string(), 0.0);
    let nl = Nonlinearity::from_candidate(&FCandidate::symbolic("exp").unwrap(), &params).unwrap();
    // F = e^U, force 3U - e^U + 1/2 has two real roots
    let s = PhaseSystem::new(1.0, 3.0, 0.5, nl);
    let pts = s.stationary_points();
    for p in &pts {
        assert!(s.force(p.u).abs() < 1e-9);
    }
    assert_eq!(pts.len(), 2);
    assert!(t_is_bounded(&s, pts.iter().find(|p| p.class == PointClass::Centre).unwrap().u));
}

fn t_is_bounded(s: &PhaseSystem, centre: f64) -> bool {
    !s.integrate((centre + 0.01, 0.0), 1e-3, 20_000).diverged
}

#[test]
fn sweep_is_deterministic() {
    let grid: Vec<_> = (0..8).map(|k| (1.0, 0.5 + 0.1 * k as f64, 0.0)).collect();
    let a = sweep(&grid, &Nonlinearity::qzk(), false);
    let b = sweep(&grid, &Nonlinearity::qzk(), false);
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

    #[test]
    fn closed_form_agrees_with_bisection(beta in 0.3f64..3.0, gamma in -3.0f64..3.0, w in 0.05f64..4.0) {
        // choose U1 so that the discriminant is w > 0
        let u1 = (w - gamma * gamma) * beta * beta / 2.0;
        let s = PhaseSystem::qzk(beta, gamma, u1);
        prop_assert!(s.closed_form_discrepancy().unwrap() < 1e-10);
    }

    #[test]
    fn time_reversal(beta in 0.5f64..2.0, gamma in 0.2f64..2.0, du in -0.2f64..0.2) {
        let s = PhaseSystem::qzk(beta, gamma, 0.0);
        let centre = s.stationary_points()[1].u;
        let mut state = (centre + du, 0.0);
        for _ in 0..1000 { state = s.rk4_step(state, 1e-3); }
        for _ in 0..1000 { state = s.rk4_step(state, -1e-3); }
        prop_assert!((state.0 - centre - du).abs() < 1e-6 && state.1.abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, rng_seed: proptest::test_runner::RngSeed::Fixed(11), ..ProptestConfig::default() })]

    #[test]
    fn centre_iff_small_orbits_are_periodic(beta in 0.5f64..1.5, gamma in 0.3f64..1.5, w in 0.2f64..2.0) {
        let u1 = (w - gamma * gamma) * beta * beta / 2.0;
        let s = PhaseSystem::qzk(beta, gamma, u1);
        for p in s.stationary_points() {
            let delta = 1e-3;
            let hints = PeriodHints { h: 1e-3, max_steps: 200_000, max_radius: Some(20.0 * delta) };
            let periodic = s.detect_periodic((p.u + delta, 0.0), &hints).is_some();
            prop_assert_eq!(periodic, p.class == PointClass::Centre);
        }
    }

    #[test]
    fn periodicity_criterion(beta in 0.5f64..1.5, gamma in -1.5f64..1.5, w in 0.2f64..2.0) {
        // at a stationary point with f(U_P) > gamma the point is a centre
        let u1 = (w - gamma * gamma) * beta * beta / 2.0;
        let s = PhaseSystem::qzk(beta, gamma, u1);
        for p in s.stationary_points() {
            if p.u > gamma {
                prop_assert_eq!(p.class, PointClass::Centre);
            }
        }
    }
}

