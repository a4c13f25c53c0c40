use std::time::Instant;

use symmetra::catalog::{self, classification_rows};
use symmetra::detsolve::{find_symmetries, verify_table, Containment};
use symmetra::prolong::{AnsatzSpec, PdeProblem};

#[test]
fn classification_dimensions() {
    for (f, label, dim, infinite) in classification_rows() {
        let p = PdeProblem::generalized(f);
        let start = Instant::now();
        let b = find_symmetries(&p, &AnsatzSpec::default()).unwrap();
        eprintln!("{label}: dim {} in {:?}, splits {:?}", b.dimension(), start.elapsed(), b.case_splits);
        for g in &b.generators {
            eprintln!("   {g}");
        }
        assert_eq!(b.dimension(), dim, "{label}");
        assert_eq!(b.infinite_family.is_some(), infinite, "{label}");
        let expected = catalog::generators(&p).unwrap();
        let r = verify_table(&p, &AnsatzSpec::default(), &b, &expected).unwrap();
        assert!(r.all_contained(), "{label}: {r:?}");
        assert!(r.dimensions_match, "{label}: {r:?}");
    }
}

#[test]
fn qzk_basis_and_x5_dispute() {
    let p = PdeProblem::qzk();
    let b = find_symmetries(&p, &AnsatzSpec::default()).unwrap();
    assert_eq!(b.dimension(), 5);
    let expected = catalog::generators(&p).unwrap();
    let r = verify_table(&p, &AnsatzSpec::default(), &b, &expected).unwrap();
    let x5 = r.entries.iter().find(|e| e.name == "X5").unwrap();
    assert_eq!(x5.status, Containment::DisputeConfirmed);
    assert!(!x5.printed_defect_zero);
    // subset check reports the surplus
    let r = verify_table(&p, &AnsatzSpec::default(), &b, &expected[..3]).unwrap();
    assert_eq!(r.surplus.len(), 2);
}

#[test]
fn time_varying_profiles() {
    use symmetra::expr::Expr;
    use symmetra::prolong::Profile;
    let cases = [
        (Profile::Arbitrary, 3),
        (Profile::Power { p: Expr::param("p"), q: Expr::param("q") }, 4),
        (Profile::Exponential { p: Expr::param("p"), q: Expr::param("q") }, 4),
    ];
    for (profile, dim) in cases {
        let p = PdeProblem::time_varying(profile);
        let ansatz = AnsatzSpec::for_problem(&p, 3);
        let start = Instant::now();
        let b = find_symmetries(&p, &ansatz).unwrap();
        eprintln!("{}: {} in {:?} {:?}", p.family.tag(), b.dimension(), start.elapsed(), b.case_splits);
        for g in &b.generators {
            eprintln!("   {g}");
        }
        assert_eq!(b.dimension(), dim);
        let r = verify_table(&p, &ansatz, &b, &catalog::generators(&p).unwrap()).unwrap();
        assert!(r.all_contained() && r.dimensions_match, "{r:?}");
    }
}

#[test]
fn degree_four_is_stable() {
    for (f, label, dim, _) in classification_rows() {
        let p = PdeProblem::generalized(f);
        let start = Instant::now();
        let b = find_symmetries(&p, &AnsatzSpec::polynomial(4)).unwrap();
        eprintln!("{label}: degree 4 in {:?}", start.elapsed());
        assert_eq!(b.dimension(), dim, "{label}");
    }
}

#[test]
fn null_space_dimension_survives_row_scrambling() {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use symmetra::detsolve::null_space;
    use symmetra::prolong::determining_equations;

    let p = PdeProblem::qzk();
    let sys = determining_equations(&p, &AnsatzSpec::for_problem(&p, 2)).unwrap();
    let rows: Vec<_> = sys.relations.iter().map(|r| r.coeffs.clone()).collect();
    let n = sys.unknowns.len();
    let base = null_space(rows.clone(), n).dimension();
    assert_eq!(base, 5);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let mut scrambled = rows.clone();
        scrambled.shuffle(&mut rng);
        for row in scrambled.iter_mut() {
            let q = num_rational::BigRational::new(rng.gen_range(1i64..9).into(), rng.gen_range(1i64..9).into());
            for (_, c) in row.iter_mut() {
                *c = c.scale(&q);
            }
        }
        assert_eq!(null_space(scrambled, n).dimension(), base);
    }
}
