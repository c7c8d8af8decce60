//! Randomized algebraic laws, each run through its own proptest runner.

use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use pain2_core::algebra::{var, Bindings, MPoly, Monomial, Q};
use pain2_core::hamiltonian::poisson_bracket;
use pain2_core::holomorphy::{differential, exterior_derivative};
use pain2_core::{parse_expr, print_expr, RatFn, Var, VarRegistry};

fn phase() -> Vec<Var> {
    ["x", "y", "z", "w"].map(var).to_vec()
}

fn pairs() -> Vec<(Var, Var)> {
    vec![(var("x"), var("y")), (var("z"), var("w"))]
}

fn coeff() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Q::new(BigInt::from(n), BigInt::from(d)))
}

/// Polynomial in the named symbols with small exponents.
fn poly_in(
    names: &'static [&'static str],
    max_terms: usize,
    max_exp: u16,
) -> impl Strategy<Value = MPoly> {
    let n = names.len();
    prop::collection::vec(
        (coeff(), prop::collection::vec(0..=max_exp, n)),
        0..=max_terms,
    )
    .prop_map(move |terms| {
        let reg = VarRegistry::standard();
        let size = reg.names().len();
        MPoly::from_terms(
            &reg,
            terms.into_iter().map(|(c, es)| {
                let mut exps = vec![0u16; size];
                for (name, e) in names.iter().zip(es) {
                    exps[var(name).index()] = e;
                }
                (Monomial::from_exps(exps), c)
            }),
        )
    })
}

fn phase_poly() -> impl Strategy<Value = MPoly> {
    poly_in(&["x", "y", "z", "w"], 4, 2)
}

fn ratfn() -> impl Strategy<Value = RatFn> {
    (
        poly_in(&["x", "y", "t", "alpha1"], 3, 2),
        poly_in(&["x", "y", "t", "alpha1"], 3, 2),
    )
        .prop_filter_map("zero denominator", |(n, d)| RatFn::new(n, d).ok())
}

fn rf(p: MPoly) -> RatFn {
    RatFn::from_poly(p)
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

type Outcome = Result<(), String>;
type Law = fn(u32) -> Outcome;

fn finish<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Outcome {
    r.map_err(|e| e.to_string())
}

#[allow(clippy::eq_op)]
pub fn polynomial_ring_laws(cases: u32) -> Outcome {
    finish(
        runner(cases).run(&(phase_poly(), phase_poly(), phase_poly()), |(a, b, c)| {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&a - &a).is_zero());
            prop_assert_eq!(&a * &MPoly::one(&VarRegistry::standard()), a.clone());
            Ok(())
        }),
    )
}

pub fn rational_function_field_laws(cases: u32) -> Outcome {
    finish(
        runner(cases).run(&(ratfn(), ratfn(), ratfn()), |(a, b, c)| {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
            if !b.is_zero() {
                prop_assert_eq!(&a.checked_div(&b).unwrap() * &b, a.clone());
            } else {
                prop_assert!(a.checked_div(&b).is_err());
            }
            Ok(())
        }),
    )
}

pub fn leibniz_and_quotient_rules(cases: u32) -> Outcome {
    finish(runner(cases).run(&(ratfn(), ratfn()), |(a, b)| {
        let x = var("x");
        let lhs = (&a * &b).derivative(x);
        let rhs = &(&a.derivative(x) * &b) + &(&a * &b.derivative(x));
        prop_assert_eq!(lhs, rhs);
        if !b.is_zero() {
            let q = a.checked_div(&b).unwrap();
            let num = &(&a.derivative(x) * &b) - &(&a * &b.derivative(x));
            prop_assert_eq!(q.derivative(x), num.checked_div(&(&b * &b)).unwrap());
        }
        Ok(())
    }))
}

pub fn chain_rule(cases: u32) -> Outcome {
    finish(runner(cases).run(
        &(poly_in(&["x", "y"], 3, 3), poly_in(&["y", "t"], 3, 2)),
        |(f, g)| {
            // h(y, t) = f(g(y, t), y)
            let (x, y) = (var("x"), var("y"));
            let (f, g) = (rf(f), rf(g));
            let b: Bindings = [(x, g.clone())].into_iter().collect();
            let h = f.substitute(&b).unwrap();
            let fx = f.derivative(x).substitute(&b).unwrap();
            let fy = f.derivative(y).substitute(&b).unwrap();
            prop_assert_eq!(h.derivative(y), &(&fx * &g.derivative(y)) + &fy);
            Ok(())
        },
    ))
}

pub fn poisson_antisymmetry(cases: u32) -> Outcome {
    finish(runner(cases).run(&(phase_poly(), phase_poly()), |(f, g)| {
        let (f, g) = (rf(f), rf(g));
        let fg = poisson_bracket(&f, &g, &pairs());
        prop_assert_eq!(fg, -poisson_bracket(&g, &f, &pairs()));
        prop_assert!(poisson_bracket(&f, &f, &pairs()).is_zero());
        Ok(())
    }))
}

pub fn jacobi_identity(cases: u32) -> Outcome {
    finish(
        runner(cases).run(&(phase_poly(), phase_poly(), phase_poly()), |(f, g, h)| {
            let (f, g, h) = (rf(f), rf(g), rf(h));
            let p = pairs();
            let pb = |a: &RatFn, b: &RatFn| poisson_bracket(a, b, &p);
            let sum = &(&pb(&f, &pb(&g, &h)) + &pb(&g, &pb(&h, &f))) + &pb(&h, &pb(&f, &g));
            prop_assert!(sum.is_zero(), "{}", sum);
            Ok(())
        }),
    )
}

pub fn d_squared_vanishes(cases: u32) -> Outcome {
    finish(runner(cases).run(&(ratfn(), phase_poly()), |(f, g)| {
        let mut vars = phase();
        vars.push(var("t"));
        prop_assert!(exterior_derivative(&differential(&f, &vars), &vars).is_zero());
        prop_assert!(exterior_derivative(&differential(&rf(g), &vars), &vars).is_zero());
        Ok(())
    }))
}

pub fn parse_print_round_trip(cases: u32) -> Outcome {
    finish(runner(cases).run(&ratfn(), |f| {
        let text = print_expr(&f);
        prop_assert_eq!(parse_expr(&text).unwrap(), f, "{}", text);
        Ok(())
    }))
}

pub const ALL: [(&str, Law); 8] = [
    ("ring laws", polynomial_ring_laws),
    ("field laws", rational_function_field_laws),
    ("Leibniz/quotient", leibniz_and_quotient_rules),
    ("chain rule", chain_rule),
    ("Poisson antisymmetry", poisson_antisymmetry),
    ("Jacobi", jacobi_identity),
    ("d∘d = 0", d_squared_vanishes),
    ("parse/print", parse_print_round_trip),
];
