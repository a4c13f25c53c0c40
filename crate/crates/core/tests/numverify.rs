use std::collections::BTreeMap;

use symmetra::catalog;
use symmetra::expr::parse;
use symmetra::numverify::{
    corrupt, flow_check, residual, travelling_wave_convergence, verify_family, Grid, VerifyError, FLOW_EPS,
};
use symmetra::prolong::{PdeProblem, VectorField};
use symmetra::reduce::closed_form_solutions;

fn none() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

#[test]
fn default_grid() {
    let g = Grid::default();
    assert_eq!(g.points().unwrap().len(), 17 * 17 * 17);
    assert!(matches!(Grid::new([(1.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)], [4, 17, 17]), Err(VerifyError::TooCoarse(4))));
    let g = Grid::new([(0.0, 0.0), (-1.0, 1.0), (-1.0, 1.0)], [5, 5, 5]);
    assert!(matches!(g, Err(VerifyError::Empty)));
}

#[test]
fn catalog_solutions_pass_on_grid() {
    for s in closed_form_solutions() {
        let p = catalog::problem(s.family, &[]).unwrap();
        let r = residual(&s.solution, &p, &Grid::default(), &none()).unwrap();
        assert!(r < 1e-10, "{} {}: {}", s.family, s.name, r);
    }
}

#[test]
fn non_solutions_fail_on_grid() {
    let p = PdeProblem::qzk();
    assert!(residual(&parse("x/t").unwrap(), &p, &Grid::default(), &none()).unwrap() > 1e-3);
    assert!(residual(&parse("z/t").unwrap(), &p, &Grid::default(), &none()).unwrap() < 1e-12);
}

#[test]
fn flows_of_published_generators_preserve_solutions() {
    for tag in ["qzk", "const"] {
        let report = verify_family(tag, &Grid::default(), &FLOW_EPS).unwrap();
        assert!(!report.flows.is_empty());
        for f in &report.flows {
            assert!(f.pass, "{} {} eps={} on {}: {}", tag, f.generator, f.eps, f.solution, f.residual);
        }
        assert!(report.all_pass());
    }
}

#[test]
fn corrupted_generator_is_caught() {
    for tag in ["qzk", "const"] {
        let report = verify_family(tag, &Grid::default(), &FLOW_EPS).unwrap();
        assert!(report.corruption_detected(), "{}", tag);
        let worst = report.corrupted.iter().map(|c| c.residual).fold(0.0, f64::max);
        assert!(worst > 1e-3, "{}: {}", tag, worst);
    }
}

#[test]
fn pure_u_scaling_is_not_a_symmetry() {
    let p = PdeProblem::qzk();
    let v = VectorField::parse(["0", "0", "0", "u"]).unwrap();
    let r = flow_check(&v, &parse("z/t").unwrap(), &p, 0.5, &Grid::default(), &none()).unwrap();
    assert!(r > 0.0);
    let x4 = VectorField::parse(["0", "0", "t", "1"]).unwrap();
    assert!(flow_check(&corrupt(&x4, 3), &parse("z/t").unwrap(), &p, 1.0, &Grid::default(), &none()).unwrap() > 1e-3);
}

#[test]
fn non_affine_flow_is_unsupported() {
    let p = PdeProblem::qzk();
    let v = VectorField::parse(["t^2", "0", "0", "0"]).unwrap();
    assert!(matches!(
        flow_check(&v, &parse("z/t").unwrap(), &p, 0.1, &Grid::default(), &none()),
        Err(VerifyError::Flow(_))
    ));
}

#[test]
fn travelling_wave_converges() {
    let grid = Grid::new([(1.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)], [9, 9, 9]).unwrap();
    let (checks, order) =
        travelling_wave_convergence(1.0, 1.0, 0.0, (2.3, 0.0), &[0.04, 0.02, 0.01], &grid).unwrap();
    assert!(checks[2].residual < checks[0].residual);
    assert!(order >= 2.8, "observed order {} from {:?}", order, checks);
}

#[test]
fn closed_form_flows_match_matrix_exponential() {
    for tag in catalog::FAMILY_TAGS {
        let p = catalog::problem(tag, &[]).unwrap();
        for g in catalog::generators(&p).unwrap() {
            for eps in FLOW_EPS {
                let d = symmetra::numverify::matrix_discrepancy(g.field(), eps, &none()).unwrap();
                assert!(d < 1e-12, "{} {} {}: {}", tag, g.name, eps, d);
            }
        }
    }
}
