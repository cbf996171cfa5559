//! Multiple zeta values, single-variable multiple polylogarithms and iterated
//! integrals of one-forms on a real interval.
//!
//! Words of one-forms are written outermost first: `∫_a^b ω₁⋯ωₙ` integrates
//! `ω₁` last, i.e. `∫_a^b f₁(s) (∫_a^s ω₂⋯ωₙ) ds`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coeffring::is_admissible;
use crate::error::{Error, Result};
use crate::ode::{dopri5, OdeOptions};

/// A one-form `f(s) ds` on the real line.
#[derive(Clone)]
pub enum Form {
    /// `ds / s`
    Omega0,
    /// `ds / (s − 1)`
    Omega1,
    /// User-supplied `f(s) ds` with its singular points.
    Custom { f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>, singular: Vec<f64> },
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Omega0 => write!(f, "Ω0"),
            Form::Omega1 => write!(f, "Ω1"),
            Form::Custom { singular, .. } => write!(f, "Custom(singular at {singular:?})"),
        }
    }
}

impl Form {
    pub fn eval(&self, s: f64) -> Complex64 {
        match self {
            Form::Omega0 => Complex64::new(1.0 / s, 0.0),
            Form::Omega1 => Complex64::new(1.0 / (s - 1.0), 0.0),
            Form::Custom { f, .. } => f(s),
        }
    }

    fn singular_points(&self) -> Vec<f64> {
        match self {
            Form::Omega0 => vec![0.0],
            Form::Omega1 => vec![1.0],
            Form::Custom { singular, .. } => singular.clone(),
        }
    }
}

/// Omega word `Ω₀^{p₁}Ω₁^{q₁}⋯` representing `(−1)^{Σq} ζ(idx)`, as letters 0/1.
pub fn omega_word(idx: &[u32]) -> Result<Vec<u8>> {
    if !is_admissible(idx) {
        return Err(Error::Inadmissible(idx.to_vec()));
    }
    let mut w = Vec::new();
    for &s in idx {
        w.extend(std::iter::repeat(0u8).take((s - 1) as usize));
        w.push(1);
    }
    Ok(w)
}

/// Positive-form word `ω₀ = dt/t`, `ω₁ = dt/(1−t)` innermost first, whose
/// integral over `(0, x)` is `Li_idx(x)`.
fn li_word_innermost_first(idx: &[u32]) -> Vec<u8> {
    let mut w = Vec::new();
    for &s in idx.iter().rev() {
        w.push(1);
        w.extend(std::iter::repeat(0u8).take((s - 1) as usize));
    }
    w
}

/// Inverse of [`li_word_innermost_first`]; the word must start with letter 1.
fn li_indices(word: &[u8]) -> Vec<u32> {
    let mut groups: Vec<u32> = Vec::new();
    for &l in word {
        if l == 1 {
            groups.push(1);
        } else {
            *groups.last_mut().expect("word must start with letter 1") += 1;
        }
    }
    groups.reverse();
    groups
}

/// Nested-sum evaluation of `Li_idx(x)` for `|x| < 1`, truncated once a
/// tail bound falls below `tol`.
fn li_series(idx: &[u32], x: Complex64, tol: f64) -> Result<Complex64> {
    let r = x.norm();
    if r >= 1.0 {
        return Err(Error::Domain(format!("series needs |x| < 1, got {r}")));
    }
    if idx.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = idx.len();
    // harm[j] holds the nested sum over indices j+1.. with top index < n.
    let mut harm = vec![0.0f64; k + 1];
    harm[k] = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut xn = Complex64::new(1.0, 0.0);
    let mut n: u64 = 1;
    loop {
        xn *= x;
        let nf = n as f64;
        acc += xn * harm[1] / nf.powi(idx[0] as i32);
        // tail: Σ_{m>n} r^m (1 + ln m)^{k-1} bounded geometrically
        let bound = r.powf(nf + 1.0) * (1.0 + (2.0 * nf).ln()).powi(k as i32) / (1.0 - r);
        if bound < tol {
            break;
        }
        for j in 1..k {
            harm[j] += harm[j + 1] / nf.powi(idx[j] as i32);
        }
        n += 1;
        if n > 10_000_000 {
            return Err(Error::Integration("polylog series did not converge".into()));
        }
    }
    Ok(acc)
}

fn li_half(word: &[u8], tol: f64) -> Result<f64> {
    if word.is_empty() {
        return Ok(1.0);
    }
    Ok(li_series(&li_indices(word), Complex64::new(0.5, 0.0), tol)?.re)
}

/// `ζ(s₁,…,s_k)` by splitting the iterated integral at `1/2` and summing
/// both halves as polylogarithm series at `1/2`.
pub fn mzv_eval(idx: &[u32], tol: f64) -> Result<f64> {
    if !is_admissible(idx) {
        return Err(Error::Inadmissible(idx.to_vec()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let w = li_word_innermost_first(idx);
    let n = w.len();
    let part_tol = tol / (8.0 * (n as f64 + 1.0));
    let mut acc = 0.0;
    for k in 0..=n {
        let inner = &w[..k];
        let outer: Vec<u8> = w[k..].iter().rev().map(|&l| 1 - l).collect();
        acc += li_half(inner, part_tol)? * li_half(&outer, part_tol)?;
    }
    Ok(acc)
}

/// `Li_{s₁,…,s_k}(z)` for `|z| ≤ 1`.
pub fn polylog_eval(idx: &[u32], z: Complex64, tol: f64) -> Result<Complex64> {
    if idx.is_empty() || idx.iter().any(|&s| s == 0) {
        return Err(Error::Domain(format!("polylog index {idx:?} must be nonempty and positive")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let r = z.norm();
    if r > 1.0 + 1e-15 {
        return Err(Error::Domain(format!("|z| = {r} exceeds 1")));
    }
    if (z - 1.0).norm() == 0.0 {
        if idx[0] == 1 {
            return Err(Error::Singular { what: "z = 1 with leading index 1".into(), distance: 0.0 });
        }
        return Ok(Complex64::new(mzv_eval(idx, tol)?, 0.0));
    }
    if r <= 0.5 {
        return li_series(idx, z, tol * 0.1);
    }
    // Transport every prefix polylog along x = z·u from u₀ = 0.4/|z| to 1.
    let word = li_word_innermost_first(idx);
    let u0 = 0.4 / r;
    let x0 = z * u0;
    let mut y0 = Vec::with_capacity(word.len());
    for m in 1..=word.len() {
        y0.push(li_series(&li_indices(&word[..m]), x0, tol * 1e-3)?);
    }
    let opts = OdeOptions::with_tol(tol * 1e-2, tol * 1e-3);
    let y = dopri5(
        |u, y, dy| {
            let x = z * u;
            for m in 0..word.len() {
                let prev = if m == 0 { Complex64::new(1.0, 0.0) } else { y[m - 1] };
                let f = if word[m] == 0 { 1.0 / x } else { 1.0 / (1.0 - x) };
                dy[m] = z * f * prev;
            }
            Ok(())
        },
        u0,
        1.0,
        &y0,
        &opts,
    )?;
    Ok(*y.last().expect("nonempty word"))
}

fn check_singularities(forms: &[Form], a: f64, b: f64) -> Result<()> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    for f in forms {
        for s in f.singular_points() {
            if s >= lo && s <= hi {
                let distance = (s - a).abs().min((s - b).abs());
                return Err(Error::Singular { what: format!("{f:?} at s = {s} inside [{lo}, {hi}]"), distance });
            }
        }
    }
    Ok(())
}

/// `∫_a^b ω₁⋯ωₙ` by solving `Y_k' = f_k Y_{k+1}`, `Y_{n+1} = 1`, `Y_k(a) = 0`.
pub fn iterated_integral(forms: &[Form], a: f64, b: f64, tol: f64) -> Result<Complex64> {
    if forms.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    check_singularities(forms, a, b)?;
    let n = forms.len();
    let opts = OdeOptions::with_tol(tol * 1e-2, tol * 1e-3);
    let y = dopri5(
        |s, y, dy| {
            for k in 0..n {
                let next = if k + 1 < n { y[k + 1] } else { Complex64::new(1.0, 0.0) };
                dy[k] = forms[k].eval(s) * next;
            }
            Ok(())
        },
        a,
        b,
        &vec![Complex64::new(0.0, 0.0); n],
        &opts,
    )?;
    Ok(y[0])
}

fn omega_forms(word: &[u8]) -> Vec<Form> {
    word.iter().map(|&l| if l == 0 { Form::Omega0 } else { Form::Omega1 }).collect()
}

/// Least-squares fit of `values[i] ≈ c₀ + Σ_j b_j φ_j(eps[i])` returning `c₀`.
pub fn extrapolate_to_zero(eps: &[f64], values: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<f64> {
    let rows = eps.len();
    let cols = basis.len() + 1;
    if rows < cols {
        return Err(Error::Domain("not enough samples for extrapolation".into()));
    }
    let mut m = DMatrix::<f64>::zeros(rows, cols);
    for (i, &e) in eps.iter().enumerate() {
        m[(i, 0)] = 1.0;
        for (j, phi) in basis.iter().enumerate() {
            m[(i, j + 1)] = phi(e);
        }
    }
    // Column scaling keeps the system well conditioned.
    let mut scales = vec![1.0; cols];
    for (j, scale) in scales.iter_mut().enumerate() {
        let norm = m.column(j).norm();
        if norm > 0.0 {
            *scale = norm;
            for i in 0..rows {
                m[(i, j)] /= norm;
            }
        }
    }
    let rhs = DVector::from_column_slice(values);
    let svd = m.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).map_err(|e| Error::Integration(e.to_string()))?;
    Ok(sol[0] / scales[0])
}

/// `∫_0^1` of a convergent Ω-word, as the ε→0 limit of `∫_ε^{1−ε}` sampled at
/// `ε₀·2^i` and extrapolated with the logarithmic error model
/// `Σ_j ε lnʲε + Σ_j ε² lnʲε`.
pub fn iterated_integral_regularized(word: &[u8], eps0: f64, tol: f64) -> Result<f64> {
    if word.first() != Some(&0) || word.last() != Some(&1) {
        return Err(Error::Domain("regularized integral needs a word Ω0…Ω1".into()));
    }
    if !(eps0 > 0.0 && eps0 < 1e-2) {
        return Err(Error::Domain(format!("regularization parameter {eps0} outside (0, 1e-2)")));
    }
    let n = word.len();
    let forms = omega_forms(word);
    let powers = n + 1;
    let samples = 2 * powers + 4;
    let eps: Vec<f64> = (0..samples).map(|i| eps0 * 2f64.powi(i as i32)).collect();
    let mut values = Vec::with_capacity(samples);
    for &e in &eps {
        values.push(iterated_integral(&forms, e, 1.0 - e, tol * 1e-3)?.re);
    }
    let lin: Vec<Box<dyn Fn(f64) -> f64>> = (0..powers)
        .map(|j| Box::new(move |e: f64| e * e.ln().powi(j as i32)) as Box<dyn Fn(f64) -> f64>)
        .chain((0..powers).map(|j| Box::new(move |e: f64| e * e * e.ln().powi(j as i32)) as Box<dyn Fn(f64) -> f64>))
        .collect();
    let basis: Vec<&dyn Fn(f64) -> f64> = lin.iter().map(|b| b.as_ref()).collect();
    extrapolate_to_zero(&eps, &values, &basis)
}

/// `ζ(idx)` from its Ω-word: exact lower endpoint, and a logarithmic change
/// of variable `s = 1 − e^{−u}` near `s = 1` cut at `1 − ε₀` with
/// `ε₀ (1 + |ln ε₀|)^n` below the tolerance.
pub fn mzv_eval_iterint(idx: &[u32], tol: f64) -> Result<f64> {
    let word = omega_word(idx)?;
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let n = word.len();
    let sign = if word.iter().filter(|&&l| l == 1).count() % 2 == 0 { 1.0 } else { -1.0 };
    let opts = OdeOptions::with_tol(tol * 1e-3, tol * 1e-4);
    let one = Complex64::new(1.0, 0.0);
    // First leg on [s₀, 1/2]; the innermost Ω1 is regular at 0 so Y ≈ 0 there.
    let s0: f64 = 1e-12;
    let mut y0 = vec![Complex64::new(0.0, 0.0); n];
    y0[n - 1] = Complex64::new((1.0 - s0).ln(), 0.0);
    let y_half = dopri5(
        |s, y, dy| {
            for k in 0..n {
                let next = if k + 1 < n { y[k + 1] } else { one };
                let f = if word[k] == 0 { 1.0 / s } else { 1.0 / (s - 1.0) };
                dy[k] = next * f;
            }
            Ok(())
        },
        s0,
        0.5,
        &y0,
        &opts,
    )?;
    let mut u_max = 10.0f64;
    while (-u_max).exp() * (1.0 + u_max).powi(n as i32) > tol * 1e-2 {
        u_max += 2.0;
    }
    let y = dopri5(
        |u, y, dy| {
            let one_minus_s = (-u).exp();
            let s = 1.0 - one_minus_s;
            for k in 0..n {
                let next = if k + 1 < n { y[k + 1] } else { one };
                let f = if word[k] == 0 { one_minus_s / s } else { -1.0 };
                dy[k] = next * f;
            }
            Ok(())
        },
        std::f64::consts::LN_2,
        u_max,
        &y_half,
        &opts,
    )?;
    Ok(sign * y[0].re)
}

/// All admissible indices of the given weight.
pub fn admissible_indices(weight: u32) -> Vec<Vec<u32>> {
    fn compositions(n: u32) -> Vec<Vec<u32>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=n {
            for mut rest in compositions(n - first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    compositions(weight).into_iter().filter(|c| is_admissible(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

    #[test]
    fn word_round_trip() {
        for idx in [vec![2], vec![3, 1, 2], vec![2, 1, 1]] {
            assert_eq!(li_indices(&li_word_innermost_first(&idx)), idx);
        }
        assert_eq!(omega_word(&[2, 1]).unwrap(), vec![0, 1, 1]);
        assert_eq!(omega_word(&[3]).unwrap(), vec![0, 0, 1]);
    }

    #[test]
    fn zeta_two() {
        assert!((mzv_eval(&[2], 1e-13).unwrap() - PI2_6).abs() < 1e-12);
    }

    #[test]
    fn inadmissible() {
        assert!(matches!(mzv_eval(&[1, 2], 1e-10), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn li1_half() {
        let v = polylog_eval(&[1], Complex64::new(0.5, 0.0), 1e-12).unwrap();
        assert!((v.re - 2f64.ln()).abs() < 1e-12);
        let v = polylog_eval(&[1], Complex64::new(0.9, 0.0), 1e-11).unwrap();
        assert!((v.re + 0.1f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn unit_circle_polylog() {
        // Li_1(-1) = -ln 2
        let v = polylog_eval(&[1], Complex64::new(-1.0, 0.0), 1e-11).unwrap();
        assert!((v.re + 2f64.ln()).abs() < 1e-9 && v.im.abs() < 1e-9);
        assert!(polylog_eval(&[1], Complex64::new(1.0, 0.0), 1e-10).is_err());
    }

    #[test]
    fn omega0_power() {
        let forms = vec![Form::Omega0, Form::Omega0, Form::Omega0];
        let v = iterated_integral(&forms, 0.5, 2.0, 1e-10).unwrap();
        assert!((v.re - 4f64.ln().powi(3) / 6.0).abs() < 1e-9);
        assert!(iterated_integral(&forms, -1.0, 1.0, 1e-10).is_err());
    }
}
