use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use symmetra::expr::{parse, Atom, DerivativeIndex, Env, Expr, Var};

const POOL: [&str; 14] =
    ["t", "x", "z", "u", "u_x", "u_z", "u_t", "u_xz", "u_zz", "mu", "t^(-1)", "exp(2*x)", "x^(1/3)", "u^2"];

fn factor() -> impl Strategy<Value = Expr> {
    (0..POOL.len()).prop_map(|i| parse(POOL[i]).unwrap())
}

fn coefficient() -> impl Strategy<Value = Expr> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| Expr::ratio(n, d))
}

fn term() -> impl Strategy<Value = Expr> {
    (coefficient(), prop::collection::vec(factor(), 0..=3))
        .prop_map(|(c, fs)| fs.iter().fold(c, |acc, f| &acc * f))
}

fn expression() -> impl Strategy<Value = Expr> {
    prop::collection::vec(term(), 1..=4).prop_map(|ts| ts.iter().fold(Expr::zero(), |acc, t| &acc + t))
}

fn config(cases: u32, seed: u64) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(seed), ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(256, 1))]

    #[test]
    fn addition_commutes(a in expression(), b in expression()) {
        prop_assert_eq!(&a + &b, &b + &a);
    }

    #[test]
    fn multiplication_distributes(a in expression(), b in expression(), c in expression()) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn parse_inverts_print(e in expression()) {
        prop_assert_eq!(parse(&e.to_string()).unwrap(), e);
    }
}

proptest! {
    #![proptest_config(config(1000, 2))]

    #[test]
    fn total_derivatives_commute(e in expression()) {
        let xz = e.total_derivative(Var::X, 5).unwrap().total_derivative(Var::Z, 5).unwrap();
        let zx = e.total_derivative(Var::Z, 5).unwrap().total_derivative(Var::X, 5).unwrap();
        prop_assert_eq!(xz, zx);
    }
}

/// `u = sin(a t + b x + c z)` and all its jets.
fn test_function(w: [f64; 3], p: [f64; 3]) -> impl Fn(&Atom) -> Option<f64> {
    move |a: &Atom| {
        let phase = w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
        match a {
            Atom::Var(Var::T) => Some(p[0]),
            Atom::Var(Var::X) => Some(p[1]),
            Atom::Var(Var::Z) => Some(p[2]),
            Atom::Param(_) => Some(0.8),
            Atom::Jet(DerivativeIndex { t, x, z }) => {
                let k = t + x + z;
                let scale = w[0].powi(*t as i32) * w[1].powi(*x as i32) * w[2].powi(*z as i32);
                Some(scale * (phase + k as f64 * std::f64::consts::FRAC_PI_2).sin())
            }
            _ => None,
        }
    }
}

proptest! {
    #![proptest_config(config(200, 3))]

    #[test]
    fn total_derivative_matches_central_differences(
        e in expression(),
        w in prop::array::uniform3(0.3f64..1.2),
        p in prop::array::uniform3(0.6f64..1.4),
        dir in 0usize..3,
    ) {
        let v = [Var::T, Var::X, Var::Z][dir];
        let h = 1e-4;
        let at = |shift: f64| {
            let mut q = p;
            q[dir] += shift;
            e.eval_with(&test_function(w, q)).unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let exact = e.total_derivative(v, 5).unwrap().eval_with(&test_function(w, p)).unwrap();
        let scale = exact.abs().max(1.0);
        prop_assert!((fd - exact).abs() / scale < 1e-6, "fd {} exact {} for {}", fd, exact, e);
    }
}

#[test]
fn env_evaluation() {
    let mut env = Env::new();
    env.set(Atom::Var(Var::T), 2.0).set(Atom::Jet(DerivativeIndex::new(0, 0, 1)), 3.0);
    assert_eq!(parse("t*u_z + 1").unwrap().eval(&env).unwrap(), 7.0);
}
