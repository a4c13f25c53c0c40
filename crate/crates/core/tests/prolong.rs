use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use symmetra::catalog;
use symmetra::expr::{parse, Expr};
use symmetra::prolong::{determining_equations, symmetry_defect, AnsatzSpec, PdeProblem, VectorField};

const MONOMIALS: [&str; 5] = ["1", "t", "x", "z", "u"];

fn linear_component() -> impl Strategy<Value = Expr> {
    prop::array::uniform5((-4i64..=4, 1i64..=3)).prop_map(|cs| {
        cs.iter()
            .zip(MONOMIALS)
            .fold(Expr::zero(), |acc, ((n, d), m)| &acc + &(&Expr::ratio(*n, *d) * &parse(m).unwrap()))
    })
}

fn linear_field() -> impl Strategy<Value = VectorField> {
    prop::array::uniform4(linear_component()).prop_map(|[a, b, c, d]| VectorField::new(a, b, c, d))
}

fn config(cases: u32, seed: u64) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(seed), ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(32, 5))]

    #[test]
    fn defect_is_linear(v in linear_field(), w in linear_field(), a in (-5i64..=5, 1i64..=4), b in (-5i64..=5, 1i64..=4)) {
        let p = PdeProblem::qzk();
        let (a, b) = (Expr::ratio(a.0, a.1), Expr::ratio(b.0, b.1));
        let combined = v.scale(&a).add(&w.scale(&b));
        let lhs = symmetry_defect(&combined, &p).unwrap();
        let rhs = &(&a * &symmetry_defect(&v, &p).unwrap()) + &(&b * &symmetry_defect(&w, &p).unwrap());
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(config(20, 6))]

    #[test]
    fn quadratic_fields_are_not_symmetries(v in linear_field(), q in 1i64..=5) {
        // no QZK symmetry has a t^2 term in the t component
        let mut v = v;
        *v.component_mut(0) += &(&Expr::int(q) * &parse("t^2").unwrap());
        prop_assert!(!symmetry_defect(&v, &PdeProblem::qzk()).unwrap().is_zero());
    }
}

#[test]
fn published_generators_have_zero_defect() {
    for tag in catalog::FAMILY_TAGS {
        let p = catalog::problem(tag, &[]).unwrap();
        for g in catalog::generators(&p).unwrap() {
            let d = symmetry_defect(g.field(), &p).unwrap();
            assert!(d.is_zero(), "{} {}: {}", tag, g.name, d);
            if g.is_disputed() {
                assert!(!symmetry_defect(&g.printed, &p).unwrap().is_zero(), "{} {}", tag, g.name);
            }
        }
    }
}

#[test]
fn splitting_reassembles_the_defect() {
    let p = PdeProblem::qzk();
    let sys = determining_equations(&p, &AnsatzSpec::for_problem(&p, 2)).unwrap();
    for k in 0..sys.unknowns.len() {
        assert_eq!(&sys.reassemble(k).unwrap(), sys.defect(k), "{}", sys.unknowns[k].label());
    }
}
