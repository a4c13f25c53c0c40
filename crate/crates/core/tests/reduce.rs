use symmetra::catalog;
use symmetra::expr::{parse, Arg, Expr, FuncSym};
use symmetra::prolong::{FCandidate, PdeProblem, VectorField};
use symmetra::reduce::{
    closed_form_solutions, combination, first_integral, invariants_of, joint_invariants, pde_residual,
    reduce_by_pair, ReduceError, Role,
};

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn field(c: [&str; 4]) -> VectorField {
    VectorField::parse(c).unwrap()
}

fn exprs(v: &[symmetra::reduce::Invariant]) -> Vec<Expr> {
    v.iter().map(|i| i.expr.clone()).collect()
}

#[test]
fn invariants_of_published_generators() {
    let x5 = field(["3*t", "x", "z", "0"]);
    assert_eq!(exprs(&invariants_of(&x5).unwrap()), vec![e("x*t^(-1/3)"), e("z*t^(-1/3)"), e("u")]);
    let x4 = field(["0", "0", "t", "1"]);
    assert_eq!(exprs(&invariants_of(&x4).unwrap()), vec![e("t"), e("x"), e("u - z/t")]);
    let x2 = field(["0", "1", "0", "0"]);
    assert_eq!(exprs(&invariants_of(&x2).unwrap()), vec![e("t"), e("z"), e("u")]);
}

#[test]
fn every_catalog_generator_has_verified_invariants() {
    for tag in catalog::FAMILY_TAGS {
        let p = catalog::problem(tag, &[]).unwrap();
        for g in catalog::generators(&p).unwrap() {
            let invs = invariants_of(g.field()).unwrap_or_else(|err| panic!("{} {}: {}", tag, g.name, err));
            assert_eq!(invs.len(), 3);
            for i in &invs {
                assert!(g.field().apply(&i.expr).unwrap().is_zero(), "{} {} {}", tag, g.name, i.expr);
            }
        }
    }
}

#[test]
fn non_affine_generator_is_rejected() {
    assert!(invariants_of(&field(["t^2", "0", "0", "0"])).is_err());
}

#[test]
fn scaling_reduction() {
    let p = PdeProblem::qzk();
    let x4 = combination(&p, "X4").unwrap();
    let x5 = combination(&p, "X5").unwrap();
    let ode = reduce_by_pair(&p, &x4, &x5).unwrap();
    let ansatz = ode.ansatz.clone().unwrap();
    assert_eq!(ansatz.variable, e("x*t^(-1/3)"));
    assert_eq!(ansatz.u, e("z/t + U*t^(-2/3)"));
    assert_eq!(ode.equation, e("y*U_y - U"));
    assert_eq!(ode.order, 1);
    assert!(ode.verified);
    // U = c y solves it and lifts to (z + c x)/t
    assert!(ode.residual(&e("c*y")).unwrap().is_zero());
    let lifted = ansatz.lift(&e("c*y")).unwrap();
    assert_eq!(lifted, e("(z + c*x)/t"));
    assert!(pde_residual(&p, &lifted).unwrap().is_zero());
    let printed = lifted.subst_param("c", &Expr::one()).unwrap();
    assert_eq!(printed, e("(z + x)/t"));
    assert!(pde_residual(&p, &printed).unwrap().is_zero());
    // the other reading of the printed equation has no such solution
    assert!(!e("U_yy - U").is_zero());
    let second_order = symmetra::reduce::ReducedOde::new(e("U_yy - U"), "alternative reading");
    assert!(!second_order.residual(&e("c*y")).unwrap().is_zero());
}

#[test]
fn pair_order_does_not_matter() {
    let p = PdeProblem::qzk();
    let x4 = combination(&p, "X4").unwrap();
    let x5 = combination(&p, "X5").unwrap();
    let a = reduce_by_pair(&p, &x5, &x4).unwrap();
    assert_eq!(a.equation, e("y*U_y - U"));
}

fn travelling_pair(p: &PdeProblem) -> (VectorField, VectorField) {
    (combination(p, "X1 + beta*X2").unwrap(), combination(p, "X1 + gamma*X3").unwrap())
}

#[test]
fn travelling_wave_reduction_qzk() {
    let p = PdeProblem::qzk();
    let (v1, v2) = travelling_pair(&p);
    let invs = joint_invariants(&v1, &v2).unwrap();
    assert_eq!(invs[0].expr, e("z - gamma*t + gamma/beta*x"));
    assert_eq!(invs[0].role, Role::Independent);
    assert_eq!(invs[1].role, Role::Dependent);
    let ode = reduce_by_pair(&p, &v1, &v2).unwrap();
    assert!(ode.verified);
    assert_eq!(ode.equation, e("(beta^2 + gamma^2)/beta^2*U_yyy - (gamma - U)*U_y"));
    let q1 = first_integral(&ode).unwrap();
    assert_eq!(q1.equation, e("(beta^2 + gamma^2)*U_yy - gamma*beta^2*U + beta^2/2*U^2 - U1"));
    assert!(q1.verified);
    let q2 = first_integral(&q1).unwrap();
    assert_eq!(
        q2.equation,
        e("(beta^2 + gamma^2)/2*U_y^2 - gamma*beta^2/2*U^2 + beta^2/6*U^3 - U1*U - U0")
    );
    assert!(q2.verified);
    assert_eq!(q2.constants, vec!["U1".to_string(), "U0".to_string()]);
}

#[test]
fn travelling_wave_reduction_arbitrary_f() {
    let p = PdeProblem::generalized(FCandidate::Arbitrary);
    let (v1, v2) = travelling_pair(&p);
    let ode = reduce_by_pair(&p, &v1, &v2).unwrap();
    let f = Expr::func(FuncSym::unary("f", Arg::Reduced, 0));
    let big_f = Expr::func(FuncSym::unary("f", Arg::Reduced, -1));
    let expected = &(&e("(beta^2 + gamma^2)/beta^2*U_yyy") - &(&(&e("gamma") - &f) * &e("U_y"))) + &Expr::zero();
    assert_eq!(ode.equation, expected);
    let q1 = first_integral(&ode).unwrap();
    let expected = &(&e("(beta^2 + gamma^2)*U_yy") - &(&e("beta^2") * &(&e("gamma*U") - &big_f))) - &e("U1");
    assert_eq!(q1.equation, expected);
    assert_eq!(q1.equation, e("(beta^2 + gamma^2)*U_yy - beta^2*(gamma*U - F(U)) - U1"));
}

#[test]
fn trivial_quadrature() {
    let ode = symmetra::reduce::ReducedOde::new(e("U_yy"), "test");
    assert_eq!(first_integral(&ode).unwrap().equation, e("U_y - U1"));
}

#[test]
fn quadrature_pattern_mismatch() {
    let ode = symmetra::reduce::ReducedOde::new(e("U_yy*U_y + y*U"), "test");
    assert!(matches!(first_integral(&ode), Err(ReduceError::Pattern(_))));
}

#[test]
fn rank_defect_is_reported() {
    let p = PdeProblem::qzk();
    let x1 = combination(&p, "X1").unwrap();
    let twice = combination(&p, "2*X1").unwrap();
    assert!(matches!(joint_invariants(&x1, &twice), Err(ReduceError::RankDefect(1))));
}

#[test]
fn non_subalgebra_is_reported() {
    let p = PdeProblem::qzk();
    let x1 = combination(&p, "X1").unwrap();
    let x4 = combination(&p, "X4").unwrap();
    // [X1, X4] = X3 lies outside the pair
    assert!(matches!(joint_invariants(&x1, &x4), Err(ReduceError::NotSubalgebra(..))));
}

#[test]
fn catalog_solutions_have_zero_residual() {
    for s in closed_form_solutions() {
        let p = catalog::problem(s.family, &[]).unwrap();
        assert!(pde_residual(&p, &s.solution).unwrap().is_zero(), "{} {}", s.family, s.name);
    }
}

#[test]
fn non_solution_has_nonzero_residual() {
    let p = PdeProblem::qzk();
    assert!(!pde_residual(&p, &e("x/t")).unwrap().is_zero());
    assert!(!pde_residual(&p, &e("z*t")).unwrap().is_zero());
}
