//! Randomized algebraic identities of the series layer.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use hexholo::dk2::{AlgebraSeries, BimoduleSeries, Perm, T12, T13, T23};
use hexholo::geometry::{make_path, Connection, Params};
use hexholo::transport::{parallel_transport, QuadratureSpec};

const ORDER: usize = 4;

fn series(terms: Vec<(Vec<u8>, i32, i32)>, constant: bool) -> AlgebraSeries<C64> {
    let mut s = if constant { AlgebraSeries::one(ORDER) } else { AlgebraSeries::zero(ORDER) };
    for (w, re, im) in terms {
        s.add_monomial(w, C64::new(re as f64 / 4.0, im as f64 / 4.0));
    }
    s
}

fn arb_terms() -> impl Strategy<Value = Vec<(Vec<u8>, i32, i32)>> {
    prop::collection::vec((prop::collection::vec(0u8..3, 1..=ORDER), -4i32..=4, -4i32..=4), 0..6)
}

fn arb_perm() -> impl Strategy<Value = Perm> {
    (0usize..6).prop_map(|i| Perm::all()[i])
}

fn close(a: &AlgebraSeries<C64>, b: &AlgebraSeries<C64>) -> bool {
    (a - b).max_abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative(x in arb_terms(), y in arb_terms(), z in arb_terms()) {
        let (x, y, z) = (series(x, false), series(y, false), series(z, false));
        prop_assert!(close(&(&(&x * &y) * &z), &(&x * &(&y * &z))));
    }

    #[test]
    fn inverse_and_exp(x in arb_terms()) {
        let g = series(x.clone(), true);
        prop_assert!(close(&(&g * &g.inverse()), &AlgebraSeries::one(ORDER)));
        let y = series(x, false);
        let e = y.exp();
        let em = y.scale(&C64::new(-1.0, 0.0)).exp();
        prop_assert!(close(&(&e * &em), &AlgebraSeries::one(ORDER)));
    }

    #[test]
    fn permutation_is_an_action(x in arb_terms(), p in arb_perm(), q in arb_perm()) {
        let s = series(x, true);
        prop_assert_eq!(s.permute(p).permute(q), s.permute(p.then(&q)));
        prop_assert_eq!(s.permute(p).permute(p.inverse()), s);
    }

    #[test]
    fn permutation_is_multiplicative(x in arb_terms(), y in arb_terms(), p in arb_perm()) {
        let (x, y) = (series(x, true), series(y, false));
        prop_assert!(close(&(&x * &y).permute(p), &(&x.permute(p) * &y.permute(p))));
    }

    #[test]
    fn coboundary_is_bimodule_map(x in arb_terms(), y in arb_terms(), left in any::<bool>()) {
        let (a, b) = (series(x, true), series(y, false));
        let m = BimoduleSeries::<C64>::l(ORDER).try_left_act(&b).unwrap();
        let acted = if left { m.try_left_act(&a).unwrap() } else { m.try_right_act(&a).unwrap() };
        let expected = if left { &a * &m.coboundary() } else { &m.coboundary() * &a };
        prop_assert!(close(&acted.coboundary(), &expected));
    }

    #[test]
    fn coboundary_commutes_with_permutation(x in arb_terms(), p in arb_perm()) {
        let a = series(x, true);
        let m = BimoduleSeries::<C64>::r(ORDER).try_right_act(&a).unwrap();
        prop_assert!(close(&m.permute(p).coboundary(), &m.coboundary().permute(p)));
    }
}

#[test]
fn relator_boundaries() {
    let n = 3;
    let t = |l| AlgebraSeries::<C64>::letter(l, n);
    let l = BimoduleSeries::<C64>::l(n).coboundary();
    let r = BimoduleSeries::<C64>::r(n).coboundary();
    assert!(close3(&l, &t(T12).commutator(&(&t(T13) + &t(T23)))));
    assert!(close3(&r, &t(T23).commutator(&(&t(T12) + &t(T13)))));
}

fn close3(a: &AlgebraSeries<C64>, b: &AlgebraSeries<C64>) -> bool {
    (a - b).max_abs() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn transport_reverses(eps in 0.02f64..0.2, idx in 0usize..6) {
        let key = ["c_I", "c_II", "c_III", "p_I", "p_V", "q_V"][idx];
        let p = make_path(key, &Params::with_eps(eps).unwrap()).unwrap();
        let q = QuadratureSpec::new(1e-10, 1e-12).unwrap();
        let c = Connection::base();
        let fwd = parallel_transport(&p, &c, 3, &q).unwrap();
        let back = parallel_transport(&p.reverse(), &c, 3, &q).unwrap();
        prop_assert!((&(&fwd * &back) - &AlgebraSeries::one(3)).max_abs() < 1e-8);
    }
}
