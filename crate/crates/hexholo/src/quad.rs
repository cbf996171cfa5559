//! Globally adaptive Gauss–Kronrod (7, 15) quadrature for complex vector integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections.
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-10, abs_tol: 1e-12, max_subdivisions: 2000 }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Cell {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

fn norm_max(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Cell>
where
    F: FnMut(&[f64]) -> Result<Vec<Vec<Complex64>>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut xs = Vec::with_capacity(15);
    xs.push(c);
    for x in XGK.iter().take(7) {
        xs.push(c - h * x);
        xs.push(c + h * x);
    }
    let fs = f(&xs)?;
    let n = fs[0].len();
    if fs.iter().any(|v| v.len() != n) {
        return Err(Error::Integration("integrand changed dimension".into()));
    }
    let mut k: Vec<Complex64> = fs[0].iter().map(|x| x * WGK[7]).collect();
    let mut g: Vec<Complex64> = fs[0].iter().map(|x| x * WG[3]).collect();
    for j in 0..7 {
        let (f1, f2) = (&fs[1 + 2 * j], &fs[2 + 2 * j]);
        for i in 0..n {
            let s = f1[i] + f2[i];
            k[i] += s * WGK[j];
            if j % 2 == 1 {
                g[i] += s * WG[j / 2];
            }
        }
    }
    let value: Vec<Complex64> = k.iter().map(|x| x * h).collect();
    let diff: Vec<Complex64> = k.iter().zip(&g).map(|(x, y)| (x - y) * h).collect();
    let error = norm_max(&diff);
    if !error.is_finite() || value.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Cell { a, b, value, error })
}

/// Integrates a vector-valued function over `[a, b]`, pre-split at `breaks`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Vec<Complex64>>
where
    F: FnMut(f64) -> Result<Vec<Complex64>>,
{
    integrate_batched(|xs: &[f64]| xs.iter().map(|&x| f(x)).collect(), a, b, breaks, opts)
}

/// As [`integrate`], evaluating the 15 nodes of each panel in parallel.
/// The reduction order is fixed, so results do not depend on thread count.
pub fn integrate_par<F>(f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    use rayon::prelude::*;
    integrate_batched(|xs: &[f64]| xs.par_iter().map(|&x| f(x)).collect(), a, b, breaks, opts)
}

fn integrate_batched<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Vec<Complex64>>
where
    F: FnMut(&[f64]) -> Result<Vec<Vec<Complex64>>>,
{
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).expect("NaN breakpoint"));
    pts.dedup();
    let mut cells = Vec::new();
    for w in pts.windows(2) {
        cells.push(gk15(&mut f, w[0], w[1])?);
    }
    for _ in 0..opts.max_subdivisions {
        let n = cells[0].value.len();
        let mut total = vec![Complex64::new(0.0, 0.0); n];
        let mut err = 0.0;
        for c in &cells {
            for i in 0..n {
                total[i] += c.value[i];
            }
            err += c.error;
        }
        if err <= opts.abs_tol.max(opts.rel_tol * norm_max(&total)) {
            return Ok(total);
        }
        let (idx, _) = cells
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("NaN error"))
            .expect("nonempty cells");
        let cell = cells.swap_remove(idx);
        let mid = 0.5 * (cell.a + cell.b);
        if mid <= cell.a || mid >= cell.b {
            return Err(Error::Integration("interval collapsed during bisection".into()));
        }
        cells.push(gk15(&mut f, cell.a, mid)?);
        cells.push(gk15(&mut f, mid, cell.b)?);
    }
    Err(Error::Integration("subdivision budget exhausted".into()))
}

/// Scalar real convenience wrapper.
pub fn integrate_real<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let v = integrate(|x| Ok(vec![Complex64::new(f(x), 0.0)]), a, b, &[], opts)?;
    Ok(v[0].re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_real(|x| x.powi(5), 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - 64.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_complex() {
        let v = integrate(
            |x| Ok(vec![Complex64::new(0.0, 10.0 * x).exp()]),
            0.0,
            std::f64::consts::PI,
            &[],
            &QuadOptions::default(),
        )
        .unwrap();
        assert!(v[0].norm() < 1e-10);
    }

    #[test]
    fn kink_with_breakpoint() {
        let v = integrate_real(|x| (x - 0.3).abs(), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }
}
