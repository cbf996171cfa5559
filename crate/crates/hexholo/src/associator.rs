//! The Drinfeld KZ associator `Φ(A, B)` on two letters, computed three ways:
//! the Le–Murakami MZV expansion (plus its ad-form rewriting), the
//! regularized BRW formula with the `𝓘` integrals, and finite-ε transport
//! along `c_I` with the divergent exponentials stripped off.

use num_complex::Complex64;

use crate::coeffring::{binomial, rat_int, Coeff, MzvMonomial, SymCoeff};
use crate::dense::Layout;
use crate::dk2::{ad_power, AlgebraSeries, A, B};
use crate::error::{Error, Result};
use crate::mzv::extrapolate_to_zero;
use crate::ode::{dopri5, OdeOptions};

pub type TwoLetterSeries<C> = AlgebraSeries<C>;

/// A profile `(p, q)` of equal-length positive tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}

impl Profile {
    pub fn weight(&self) -> usize {
        self.p.iter().sum::<usize>() + self.q.iter().sum::<usize>()
    }

    /// Zeta index `(p₁+1, {1}^{q₁−1}, …)`.
    pub fn zeta_index(&self) -> Vec<u32> {
        let mut idx = Vec::new();
        for (p, q) in self.p.iter().zip(&self.q) {
            idx.push(*p as u32 + 1);
            idx.extend(std::iter::repeat(1).take(q - 1));
        }
        idx
    }
}

fn compositions_with_parts(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions_with_parts(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All profiles of weight at most `max_weight`.
pub fn profiles(max_weight: usize) -> Vec<Profile> {
    let mut out = Vec::new();
    for len in 1..=max_weight / 2 {
        for wp in len..=max_weight - len {
            for wq in len..=max_weight - wp {
                for p in compositions_with_parts(wp, len) {
                    for q in compositions_with_parts(wq, len) {
                        out.push(Profile { p: p.clone(), q });
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn tuples_below(bounds: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &b in bounds {
        let mut next = Vec::new();
        for t in &out {
            for x in 0..=b {
                let mut t2 = t.clone();
                t2.push(x);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// `ζ^{p,q}_j = (−1)^{|j|+|p|} ζ(p₁+1, {1}^{q₁−1}, …) Π C(p_l, j_l)`.
pub fn zeta_pqj(profile: &Profile, j: &[usize]) -> SymCoeff {
    let jsum: usize = j.iter().sum();
    let psum: usize = profile.p.iter().sum();
    let mut q = rat_int(if (jsum + psum) % 2 == 0 { 1 } else { -1 });
    for (p, jl) in profile.p.iter().zip(j) {
        q *= binomial(*p, *jl);
    }
    let mono = MzvMonomial::single(&profile.zeta_index()).expect("profile indices are admissible");
    SymCoeff::monomial(0, 0, mono, q)
}

/// Le–Murakami expansion, truncated at grade `order`.
pub fn phi_symbolic(order: usize) -> TwoLetterSeries<SymCoeff> {
    let mut phi = AlgebraSeries::one(order);
    for prof in profiles(order) {
        let qsum: usize = prof.q.iter().sum();
        let psum: usize = prof.p.iter().sum();
        for j in tuples_below(&prof.p) {
            let z = zeta_pqj(&prof, &j);
            let jsum: usize = j.iter().sum();
            for k in tuples_below(&prof.q) {
                let ksum: usize = k.iter().sum();
                let mut sign = rat_int(1);
                for (ql, kl) in prof.q.iter().zip(&k) {
                    sign *= binomial(*ql, *kl) * rat_int(if kl % 2 == 0 { 1 } else { -1 });
                }
                let mut w = vec![B; qsum - ksum];
                for (jl, kl) in j.iter().zip(&k) {
                    w.extend(std::iter::repeat(A).take(*jl));
                    w.extend(std::iter::repeat(B).take(*kl));
                }
                w.extend(std::iter::repeat(A).take(psum - jsum));
                phi.add_monomial(w, z.scale(&sign));
            }
        }
    }
    phi
}

/// The same series with the `k`-sums carried out as iterated `ad_B`.
pub fn phi_symbolic_ad(order: usize) -> TwoLetterSeries<SymCoeff> {
    let a = AlgebraSeries::<SymCoeff>::letter(A, order);
    let b = AlgebraSeries::<SymCoeff>::letter(B, order);
    let mut phi = AlgebraSeries::one(order);
    for prof in profiles(order) {
        let psum: usize = prof.p.iter().sum();
        for j in tuples_below(&prof.p) {
            let jsum: usize = j.iter().sum();
            let mut y = AlgebraSeries::one(order);
            for (ql, jl) in prof.q.iter().zip(&j) {
                y = ad_power(&b, &(&y * &a.pow(*jl)), *ql);
            }
            let term = &y * &a.pow(psum - jsum);
            phi = &phi + &term.scale(&zeta_pqj(&prof, &j));
        }
    }
    phi
}

/// Swaps the letters `A ↔ B`.
pub fn swap_letters<C: Coeff>(s: &TwoLetterSeries<C>) -> TwoLetterSeries<C> {
    AlgebraSeries::from_terms(s.order(), s.terms().iter().map(|(w, c)| (w.iter().map(|&l| 1 - l).collect(), c.clone())))
}

/// `𝓘_{ℓ₁…ℓ_r}` over `[0, ∞)`, with the outer variable `τ₁` integrated last.
pub fn brw_integral(ls: &[usize], tol: f64) -> Result<f64> {
    if ls.is_empty() {
        return Ok(1.0);
    }
    let r = ls.len();
    let lmax = *ls.iter().max().expect("nonempty") as f64;
    let lt = -tol.ln();
    let mut t_max = lt + lmax * lt.ln().max(1.0);
    // Tail of each factor: ∫_T^∞ τ^ℓ e^{−τ}/ℓ! = e^{−T} Σ_{i≤ℓ} T^i/i!.
    let tail = |t: f64| -> f64 {
        ls.iter()
            .map(|&l| {
                let mut term = 1.0;
                let mut acc = 1.0;
                for i in 1..=l {
                    term *= t / i as f64;
                    acc += term;
                }
                (-t).exp() * acc
            })
            .sum::<f64>()
    };
    while tail(t_max) > tol / 10.0 {
        t_max *= 2.0;
    }
    let facts: Vec<f64> = ls.iter().map(|&l| (1..=l).map(|i| i as f64).product()).collect();
    let opts = OdeOptions::with_tol(tol * 1e-2, tol * 1e-3);
    let one = Complex64::new(1.0, 0.0);
    let y = dopri5(
        |tau, y, dy| {
            let den = 2.0 * tau.exp() - 1.0;
            for k in 0..r {
                let next = if k + 1 < r { y[k + 1] } else { one };
                dy[k] = next * (tau.powi(ls[k] as i32) / (facts[k] * den));
            }
            Ok(())
        },
        0.0,
        t_max,
        &vec![Complex64::new(0.0, 0.0); r],
        &opts,
    )?;
    Ok(y[0].re)
}

fn xi_series(order: usize, outer: u8, inner: u8, tol: f64) -> Result<TwoLetterSeries<Complex64>> {
    let bl = AlgebraSeries::<Complex64>::letter(outer, order);
    let al = AlgebraSeries::<Complex64>::letter(inner, order);
    let ads: Vec<AlgebraSeries<Complex64>> = (0..order).map(|l| ad_power(&bl, &al, l)).collect();
    let mut xi = AlgebraSeries::one(order);
    // enumerate (ℓ₁, …, ℓ_r) with r + Σℓ ≤ order
    let mut stack: Vec<Vec<usize>> = (0..order).map(|l| vec![l]).collect();
    while let Some(ls) = stack.pop() {
        let grade = ls.len() + ls.iter().sum::<usize>();
        if grade > order {
            continue;
        }
        let coeff = brw_integral(&ls, tol)?;
        let mut term = AlgebraSeries::one(order);
        for &l in &ls {
            term = &term * &ads[l];
        }
        xi = &xi + &term.scale(&Complex64::new(coeff, 0.0));
        for l in 0..order {
            let mut next = ls.clone();
            next.push(l);
            if next.len() + next.iter().sum::<usize>() <= order {
                stack.push(next);
            }
        }
    }
    Ok(xi)
}

/// `Φ(A,B) = e^{ln2·B} Ξ_{B,A} Ξ_{A,B}^{−1} e^{−ln2·A}`.
pub fn phi_numeric_brw(order: usize, tol: f64) -> Result<TwoLetterSeries<Complex64>> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let ln2 = Complex64::new(2f64.ln(), 0.0);
    let a = AlgebraSeries::<Complex64>::letter(A, order);
    let b = AlgebraSeries::<Complex64>::letter(B, order);
    let xi_ba = xi_series(order, B, A, tol)?;
    let xi_ab = xi_series(order, A, B, tol)?;
    let left = b.scale(&ln2).exp();
    let right = a.scale(&-ln2).exp();
    Ok(&(&(&left * &xi_ba) * &xi_ab.inverse()) * &right)
}

/// Transport of `Γ(A,B) = A dx/x + B dx/(x−1)` along `c_I` from `ε` to `1−ε`.
pub fn transport_c_i(order: usize, eps: f64, tol: f64) -> Result<TwoLetterSeries<Complex64>> {
    let lay = Layout::new(2, order);
    let opts = OdeOptions::with_tol(tol, tol * 1e-2);
    let speed = 1.0 - 2.0 * eps;
    let dim = lay.dim();
    let w = dopri5(
        |s, y, dy| {
            let x = eps + s * speed;
            let coeffs = [Complex64::new(speed / x, 0.0), Complex64::new(speed / (x - 1.0), 0.0)];
            dy.iter_mut().for_each(|d| *d = Complex64::new(0.0, 0.0));
            lay.add_letter_times(&coeffs, y, dy);
            Ok(())
        },
        0.0,
        1.0,
        &{
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[0] = Complex64::new(1.0, 0.0);
            v
        },
        &opts,
    )?;
    Ok(lay.to_series(&w))
}

/// `Φ^ε = e^{−ln ε·B} W^{c_I} e^{ln ε·A}` at finite `ε ∈ (0, 1/4]`.
pub fn phi_transport_eps(order: usize, eps: f64, tol: f64) -> Result<TwoLetterSeries<Complex64>> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1/4]")));
    }
    let w = transport_c_i(order, eps, tol)?;
    let ln = Complex64::new(eps.ln(), 0.0);
    let a = AlgebraSeries::<Complex64>::letter(A, order);
    let b = AlgebraSeries::<Complex64>::letter(B, order);
    Ok(&(&b.scale(&-ln).exp() * &w) * &a.scale(&ln).exp())
}

/// Default ε grid for the transport extrapolation.
pub fn default_eps_grid(order: usize) -> Vec<f64> {
    (0..2 * order + 6).map(|i| 1e-2 * 2f64.powi(-(i as i32))).collect()
}

/// Coefficientwise extrapolation of [`phi_transport_eps`] to ε = 0 with the
/// model `c₀ + Σ_k ε lnᵏε + Σ_k ε² lnᵏε`, `k ≤ order`.
pub fn phi_transport_extrapolated(order: usize, grid: &[f64], tol: f64) -> Result<TwoLetterSeries<Complex64>> {
    let samples: Vec<TwoLetterSeries<Complex64>> =
        grid.iter().map(|&e| phi_transport_eps(order, e, tol)).collect::<Result<_>>()?;
    let lay = Layout::new(2, order);
    let dense: Vec<Vec<Complex64>> = samples.iter().map(|s| lay.from_series(s)).collect();
    let fns: Vec<Box<dyn Fn(f64) -> f64>> = (0..=order)
        .map(|k| Box::new(move |e: f64| e * e.ln().powi(k as i32)) as Box<dyn Fn(f64) -> f64>)
        .chain((0..=order).map(|k| Box::new(move |e: f64| e * e * e.ln().powi(k as i32)) as Box<dyn Fn(f64) -> f64>))
        .collect();
    let basis: Vec<&dyn Fn(f64) -> f64> = fns.iter().map(|f| f.as_ref()).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); lay.dim()];
    for (i, slot) in out.iter_mut().enumerate() {
        let re: Vec<f64> = dense.iter().map(|d| d[i].re).collect();
        let im: Vec<f64> = dense.iter().map(|d| d[i].im).collect();
        let r = if re.iter().all(|x| *x == 0.0) { 0.0 } else { extrapolate_to_zero(grid, &re, &basis)? };
        let m = if im.iter().all(|x| *x == 0.0) { 0.0 } else { extrapolate_to_zero(grid, &im, &basis)? };
        *slot = Complex64::new(r, m);
    }
    Ok(lay.to_series(&out))
}

/// `Φ(X, Y)`: substitutes `A ↦ X`, `B ↦ Y`.
pub fn substitute_pair<C: Coeff>(
    phi: &TwoLetterSeries<C>,
    x: &AlgebraSeries<C>,
    y: &AlgebraSeries<C>,
) -> Result<AlgebraSeries<C>> {
    phi.try_substitute(&[x.clone(), y.clone()], x.order())
}

/// Evaluates an ε-independent symbolic series numerically.
pub fn eval_series(s: &AlgebraSeries<SymCoeff>, tol: f64) -> Result<AlgebraSeries<Complex64>> {
    s.try_map_coeffs(|c| {
        if c.terms().any(|(k, _)| k.lneps > 0) {
            return Err(Error::Domain("coefficient depends on ln ε".into()));
        }
        c.eval(0.5, tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_counts() {
        assert!(profiles(1).is_empty());
        assert_eq!(profiles(2), vec![Profile { p: vec![1], q: vec![1] }]);
        assert_eq!(profiles(3).len(), 3);
    }

    #[test]
    fn low_grades() {
        let phi = phi_symbolic(3);
        assert_eq!(phi.extract_grade(0), AlgebraSeries::one(3));
        assert!(phi.extract_grade(1).is_zero());
    }

    #[test]
    fn grade_two_is_commutator() {
        // p = q = (1): the j, k sums give ζ(2)(BA − AB)
        let phi = phi_symbolic(2);
        let z2 = SymCoeff::zeta(&[2]).unwrap();
        let expected = AlgebraSeries::from_terms(2, [(vec![B, A], z2.clone()), (vec![A, B], z2.neg())]);
        assert_eq!(phi.extract_grade(2), expected);
    }

    #[test]
    fn brw_single_integral() {
        // ∫_0^∞ dτ/(2e^τ − 1) = ln 2
        assert!((brw_integral(&[0], 1e-12).unwrap() - 2f64.ln()).abs() < 1e-10);
    }

    fn max_diff(x: &AlgebraSeries<Complex64>, y: &AlgebraSeries<Complex64>) -> f64 {
        (x - y).max_abs()
    }

    #[test]
    fn lm_matches_ad_form() {
        for n in 2..=5 {
            let d = &phi_symbolic(n) - &phi_symbolic_ad(n);
            assert!(d.map_coeffs(|c| c.reduced()).is_zero(), "order {n}");
        }
    }

    #[test]
    fn brw_matches_lm() {
        let lm = eval_series(&phi_symbolic(4), 1e-14).unwrap();
        let brw = phi_numeric_brw(4, 1e-11).unwrap();
        assert!(max_diff(&lm, &brw) < 1e-8, "{}", max_diff(&lm, &brw));
    }

    #[test]
    fn transport_matches_lm() {
        let lm = eval_series(&phi_symbolic(4), 1e-14).unwrap();
        let tr = phi_transport_extrapolated(4, &default_eps_grid(4), 1e-12).unwrap();
        assert!(max_diff(&lm, &tr) < 1e-6, "{}", max_diff(&lm, &tr));
    }

    #[test]
    fn abelianized_transport() {
        // with commuting letters W = exp((ln(1−ε) − ln ε)(A − B))
        let eps: f64 = 0.05;
        let w = transport_c_i(4, eps, 1e-12).unwrap();
        let x = (1.0 - eps).ln() - eps.ln();
        let mut ab = std::collections::BTreeMap::new();
        for (word, c) in w.terms() {
            let i = word.iter().filter(|&&l| l == A).count();
            *ab.entry((i, word.len() - i)).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        for ((i, j), c) in ab {
            let expected = x.powi(i as i32) * (-x).powi(j as i32) / (fact(i) * fact(j));
            assert!((c.re - expected).abs() < 1e-8 * expected.abs().max(1.0), "{i} {j}");
        }
    }
}
