//! Frozen closed-form values the numerical routes must reproduce.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64 as C64;

use hexholo::associator::{eval_series, phi_numeric_brw, phi_symbolic};
use hexholo::dk2::{A, B};
use hexholo::mzv::{mzv_eval, mzv_eval_iterint, polylog_eval};

#[test]
fn weight_four_zetas() {
    let pi4 = PI.powi(4);
    let cases: [(&[u32], f64); 4] = [(&[4], pi4 / 90.0), (&[3, 1], pi4 / 360.0), (&[2, 2], pi4 / 120.0), (&[2, 1, 1], pi4 / 90.0)];
    for (idx, v) in cases {
        assert!((mzv_eval(idx, 1e-13).unwrap() - v).abs() < 1e-11, "{idx:?}");
        assert!((mzv_eval_iterint(idx, 1e-10).unwrap() - v).abs() < 1e-8, "{idx:?}");
    }
}

#[test]
fn dilog_at_half() {
    let v = polylog_eval(&[2], C64::new(0.5, 0.0), 1e-14).unwrap();
    let exact = PI * PI / 12.0 - LN_2 * LN_2 / 2.0;
    assert!((v.re - exact).abs() < 1e-12 && v.im.abs() < 1e-14);
}

#[test]
fn associator_low_grades() {
    let z2 = PI * PI / 6.0;
    let z3 = 1.2020569031595942;
    for phi in [eval_series(&phi_symbolic(3), 1e-13).unwrap(), phi_numeric_brw(3, 1e-12).unwrap()] {
        let c = |w: &[u8]| phi.coeff(w);
        assert!((c(&[A, B]) - C64::new(-z2, 0.0)).norm() < 1e-10);
        assert!((c(&[B, A]) - C64::new(z2, 0.0)).norm() < 1e-10);
        assert!((c(&[A, A, B]) - C64::new(-z3, 0.0)).norm() < 1e-10);
        assert!((c(&[B, A, A]) - C64::new(-z3, 0.0)).norm() < 1e-10);
        assert!((c(&[A, B, A]) - C64::new(2.0 * z3, 0.0)).norm() < 1e-10);
        assert!(c(&[A]).norm() < 1e-12 && c(&[B]).norm() < 1e-12);
    }
}
