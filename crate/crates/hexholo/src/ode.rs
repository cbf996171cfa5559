//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step as a fraction of the interval length.
    pub initial_fraction: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_steps: 200_000, initial_fraction: 1e-2 }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Default::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo(y: &[Complex64], h: f64, ks: &[(&[Complex64], f64)], out: &mut [Complex64]) {
    for i in 0..y.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in ks {
            if *a != 0.0 {
                acc += k[i] * *a;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) and returns `y(t1)`.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y0: &[Complex64], opts: &OdeOptions) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t0 == t1 || n == 0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut h = span * opts.initial_fraction;
    let h_min = span * 1e-14;
    let mut t = t0;
    let z = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n]);
    let mut tmp = vec![z; n];
    let mut y_new = vec![z; n];
    f(t, &y, &mut k1)?;
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
        }
        let mut last = false;
        if h >= (t1 - t).abs() {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = h * dir;
        combo(&y, hs, &[(&k1, A21)], &mut tmp);
        f(t + C2 * hs, &tmp, &mut k2)?;
        combo(&y, hs, &[(&k1, A31), (&k2, A32)], &mut tmp);
        f(t + C3 * hs, &tmp, &mut k3)?;
        combo(&y, hs, &[(&k1, A41), (&k2, A42), (&k3, A43)], &mut tmp);
        f(t + C4 * hs, &tmp, &mut k4)?;
        combo(&y, hs, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)], &mut tmp);
        f(t + C5 * hs, &tmp, &mut k5)?;
        combo(&y, hs, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)], &mut tmp);
        f(t + hs, &tmp, &mut k6)?;
        combo(&y, hs, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)], &mut y_new);
        let t_new = if last { t1 } else { t + hs };
        f(t_new, &y_new, &mut k7)?;
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            return Err(Error::NonFinite);
        }
        if err <= 1.0 {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < h_min {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = dopri5(
            |_, y, dy| {
                dy[0] = y[0] * Complex64::new(0.0, 1.0);
                Ok(())
            },
            0.0,
            std::f64::consts::PI,
            &[Complex64::new(1.0, 0.0)],
            &OdeOptions::with_tol(1e-12, 1e-14),
        )
        .unwrap();
        assert!((y[0] + 1.0).norm() < 1e-10);
    }

    #[test]
    fn backward_direction() {
        let y = dopri5(
            |t, _, dy| {
                dy[0] = Complex64::new(2.0 * t, 0.0);
                Ok(())
            },
            1.0,
            0.0,
            &[Complex64::new(1.0, 0.0)],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(y[0].norm() < 1e-10);
    }
}
