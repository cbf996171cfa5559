//! Parallel transport along 1-paths and 2-holonomy over 2-paths for the KZ
//! 2-connection, plus the flatness and globularity verifiers.
//!
//! Transport solves `dW/dr = ∇[dp/dr]·W` with `W(r₀) = 1`. The 2-holonomy is
//! `∫₀¹ ds ∫₀¹ dr W^{𝒫^s}_{1r} Δ[∂𝒫/∂s, ∂𝒫/∂r] W^{𝒫^s}_{r0}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dense::Layout;
use crate::dk2::{lambda, AlgebraSeries, BimoduleSeries, T12, T13, T23};
use crate::error::{Error, Result};
use crate::geometry::{Connection, Dual, Path1, Path2, Point, Tangent};
use crate::ode::{dopri5, OdeOptions};
use crate::quad::{integrate_par, QuadOptions};

type C64 = Complex64;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tolerances shared by the transport ODE and the outer 2-holonomy quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of adaptive bisections of the outer `s`-integral.
    pub max_depth: usize,
    /// Nodes per panel of the outer rule (Gauss–Kronrod).
    pub rule_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-12, max_depth: 400, rule_points: 15 }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        Ok(QuadratureSpec { rel_tol, abs_tol, ..Default::default() })
    }

    /// The inner ODE runs ten times tighter than the outer rule so that its
    /// step-selection noise stays below the outer error estimate.
    fn ode(&self) -> OdeOptions {
        OdeOptions::with_tol(self.rel_tol * 0.1, self.abs_tol * 0.1)
    }

    fn quad(&self) -> QuadOptions {
        QuadOptions { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_subdivisions: self.max_depth }
    }
}

/// Splits `[r0, r1]` at the corners strictly inside it.
fn segments(corners: &[f64], r0: f64, r1: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![r0];
    pts.extend(corners.iter().copied().filter(|&c| c > r0 && c < r1));
    pts.push(r1);
    pts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// Keeps piecewise formulas on the segment being integrated; the offset is far
/// below any tolerance in use.
fn inside(t: f64, a: f64, b: f64) -> f64 {
    let d = 1e-13 * (b - a);
    t.clamp(a + d, b - d)
}

/// `W^p_{r₁ r₀}`: transport from `r₀` to `r₁` along `p`.
pub fn partial_transport(
    p: &Path1,
    c: &Connection,
    order: usize,
    q: &QuadratureSpec,
    r0: f64,
    r1: f64,
) -> Result<AlgebraSeries<C64>> {
    if !(0.0..=1.0).contains(&r0) || !(0.0..=1.0).contains(&r1) || r0 > r1 {
        return Err(Error::Domain(format!("need 0 ≤ r₀ ≤ r₁ ≤ 1, got {r0}, {r1}")));
    }
    let lay = Layout::new(3, order);
    let mut y = lay.one();
    let opts = q.ode();
    for (a, b) in segments(p.corners(), r0, r1) {
        y = dopri5(
            |t, w, dw| {
                let t = inside(t, a, b);
                let coeffs = c.nabla_coeffs(p.at(t), p.tangent(t))?;
                dw.fill(ZERO);
                lay.add_letter_times(&coeffs, w, dw);
                Ok(())
            },
            a,
            b,
            &y,
            &opts,
        )?;
    }
    Ok(lay.to_series(&y))
}

/// `W^p = W^p_{10}`.
pub fn parallel_transport(p: &Path1, c: &Connection, order: usize, q: &QuadratureSpec) -> Result<AlgebraSeries<C64>> {
    partial_transport(p, c, order, q, 0.0, 1.0)
}

fn bimodule_to_dense(lay: &Layout, m: &BimoduleSeries<C64>) -> Vec<C64> {
    let mut v = vec![ZERO; lay.mod_dim()];
    for (w, c) in m.terms() {
        if w.grade() <= lay.order {
            v[lay.mod_index(w)] += c;
        }
    }
    v
}

/// The inner `r`-integral at a fixed `s`, returned in dense bimodule layout.
#[allow(non_snake_case)]
fn cross_section_integral(P: &Path2, c: &Connection, lay: &Layout, opts: &OdeOptions, s: f64) -> Result<Vec<C64>> {
    let (dim, mdim) = (lay.dim(), lay.mod_dim());
    let mut y = vec![ZERO; 2 * dim + mdim];
    y[0] = C64::new(1.0, 0.0);
    y[dim] = C64::new(1.0, 0.0);
    let mut coeffs = [ZERO; 3];
    for (a, b) in segments(&P.r_corners(s), 0.0, 1.0) {
        y = dopri5(
            |t, st, dst| {
                let t = inside(t, a, b);
                let pt: Point = P.at(s, t);
                let dr: Tangent = P.dr(s, t);
                let ds: Tangent = P.ds(s, t);
                coeffs.copy_from_slice(&c.nabla_coeffs(pt, dr)?);
                let delta = c.delta_coeffs(pt, ds, dr)?;
                dst.fill(ZERO);
                let (w, rest) = st.split_at(dim);
                let (u, _) = rest.split_at(dim);
                let (dw, drest) = dst.split_at_mut(dim);
                let (du, di) = drest.split_at_mut(dim);
                lay.add_letter_times(&coeffs, w, dw);
                let neg = coeffs.map(|x| -x);
                lay.add_times_letter(u, &neg, du);
                lay.add_sandwich(u, delta, w, di);
                Ok(())
            },
            a,
            b,
            &y,
            opts,
        )?;
    }
    let w1 = lay.to_series(&y[..dim]);
    let inner = lay.to_bimodule(&y[2 * dim..]);
    Ok(bimodule_to_dense(lay, &(&w1 * &inner)))
}

/// 2-holonomy `W^𝒫` of a 2-path.
#[allow(non_snake_case)]
pub fn surface_holonomy(P: &Path2, c: &Connection, order: usize, q: &QuadratureSpec) -> Result<BimoduleSeries<C64>> {
    let lay = Layout::new(3, order);
    if lay.mod_dim() == 0 {
        return Ok(BimoduleSeries::zero(order));
    }
    let opts = q.ode();
    let v = integrate_par(|s| cross_section_integral(P, c, &lay, &opts, s), 0.0, 1.0, P.s_corners(), &q.quad())?;
    Ok(lay.to_bimodule(&v))
}

/// Per-grade residuals of `∂W^𝒫 − (W^{source} − W^{target})`.
#[derive(Clone, Debug, Serialize)]
pub struct GlobularityReport {
    pub key: String,
    pub order: usize,
    /// Entry `k` is the max coefficient deviation in grade `k`.
    pub per_grade: Vec<f64>,
    pub max_deviation: f64,
}

#[allow(non_snake_case)]
pub fn globularity_check(P: &Path2, c: &Connection, order: usize, q: &QuadratureSpec) -> Result<GlobularityReport> {
    let h = surface_holonomy(P, c, order, q)?;
    let src = parallel_transport(&P.source(), c, order, q)?;
    let tgt = parallel_transport(&P.target(), c, order, q)?;
    let diff = &h.coboundary() - &(&src - &tgt);
    let per_grade: Vec<f64> = (0..=order).map(|k| diff.max_abs_in_grade(k)).collect();
    let max_deviation = per_grade.iter().copied().fold(0.0, f64::max);
    Ok(GlobularityReport { key: P.key.clone(), order, per_grade, max_deviation })
}

/// Maximum residuals of the flatness identities over a sample set.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FlatnessReport {
    pub samples: usize,
    /// `max |d∇ + ∇∧∇ − ∂Δ|` on the `dz∧dv` component.
    pub fake_flatness: f64,
    /// `max |dΔ + ∇∧^▷Δ|` on `dz∧dv∧dw` over `(z, v, w)`.
    pub two_curvature: f64,
    /// `max |d∇|`, reported separately since the wedge term carries the identity.
    pub d_nabla: f64,
    /// `max |[A_z, A_v]|`, showing the check is not vacuous.
    pub wedge_magnitude: f64,
}

fn alg(coeffs: &[C64; 3], order: usize) -> AlgebraSeries<C64> {
    let mut a = AlgebraSeries::zero(order);
    for l in [T12, T13, T23] {
        a.add_monomial(vec![l], coeffs[l as usize]);
    }
    a
}

fn unit(i: usize) -> Tangent {
    let one = C64::new(1.0, 0.0);
    if i == 0 {
        (one, ZERO)
    } else {
        (ZERO, one)
    }
}

/// `∂_z A_v − ∂_v A_z` from the dual-number form of the coefficients.
fn d_nabla_zv(c: &Connection, p: Point) -> [C64; 3] {
    let one = C64::new(1.0, 0.0);
    let zd = Dual { v: p.z, d: one };
    let vd = Dual { v: p.v, d: one };
    let dz = c.nabla_components(zd, Dual::ccst(p.v));
    let dv = c.nabla_components(Dual::ccst(p.z), vd);
    let mut out = [ZERO; 3];
    for i in 0..3 {
        out[i] = dz[1][i].d - dv[0][i].d;
    }
    out
}

/// Fake flatness `d∇ + ∇∧∇ = ∂Δ` and 2-flatness at every sample, to grade `order`.
pub fn flatness_checks(c: &Connection, samples: &[Point], order: usize) -> Result<FlatnessReport> {
    let mut rep = FlatnessReport { samples: samples.len(), ..Default::default() };
    for &p in samples {
        let az = alg(&c.nabla_coeffs(p, unit(0))?, order);
        let av = alg(&c.nabla_coeffs(p, unit(1))?, order);
        let d_nabla = alg(&d_nabla_zv(c, p), order);
        let wedge = az.commutator(&av);
        let d = c.delta_coeffs(p, unit(0), unit(1))?;
        let delta = &BimoduleSeries::l(order).scale(&d[0]) + &BimoduleSeries::r(order).scale(&d[1]);
        let res = &(&d_nabla + &wedge) - &delta.coboundary();
        rep.fake_flatness = rep.fake_flatness.max(res.max_abs());
        rep.d_nabla = rep.d_nabla.max(d_nabla.max_abs());
        rep.wedge_magnitude = rep.wedge_magnitude.max(wedge.max_abs());

        // On (z, v, w) the connection has no dw part and Δ has no w-dependence, so
        // the dz∧dv∧dw component reduces to ∂_w Δ_zv + A_w ▷ Δ_zv − A_v ▷ Δ_zw + A_z ▷ Δ_vw.
        let a_w = AlgebraSeries::<C64>::zero(order);
        let dw_delta = BimoduleSeries::<C64>::zero(order);
        let triangle = |a: &AlgebraSeries<C64>, m: &BimoduleSeries<C64>| BimoduleSeries::triangle(a, m);
        let zero_m = BimoduleSeries::<C64>::zero(order);
        let g = &(&(&dw_delta + &triangle(&a_w, &delta)) - &triangle(&av, &zero_m)) + &triangle(&az, &zero_m);
        rep.two_curvature = rep.two_curvature.max(g.max_abs());
    }
    Ok(rep)
}

/// Checks `τ*` against the Jacobian of `τ`: `∇_{τ(p)}[Dτ·u]` equals
/// `(τ*∇)_p[u]`, and likewise for `Δ`. Returns the max deviation.
pub fn pullback_consistency(c: &Connection, tau: crate::geometry::Tau, samples: &[Point]) -> Result<f64> {
    let pulled = c.pullback(tau);
    let mut worst: f64 = 0.0;
    for &p in samples {
        let j = tau.jacobian(p);
        let q = tau.apply(p);
        let push = |u: Tangent| (j[0][0] * u.0 + j[0][1] * u.1, j[1][0] * u.0 + j[1][1] * u.1);
        for i in 0..2 {
            let a = c.nabla_coeffs(q, push(unit(i)))?;
            let b = pulled.nabla_coeffs(p, unit(i))?;
            for k in 0..3 {
                worst = worst.max((a[k] - b[k]).norm());
            }
        }
        let a = c.delta_coeffs(q, push(unit(0)), push(unit(1)))?;
        let b = pulled.delta_coeffs(p, unit(0), unit(1))?;
        for k in 0..2 {
            worst = worst.max((a[k] - b[k]).norm());
        }
    }
    Ok(worst)
}

/// `exp(ln(b/a)·Λ)` with the principal logarithm, the transport along a vertical path.
pub fn vertical_transport_closed_form(a: C64, b: C64, order: usize) -> AlgebraSeries<C64> {
    lambda::<C64>(order).scale(&(b / a).ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dk2::{ModLetter, ModWord};
    use crate::geometry::{make_2path, make_path, Params, Tau};
    use std::f64::consts::PI;

    fn q() -> QuadratureSpec {
        QuadratureSpec::new(1e-10, 1e-12).unwrap()
    }

    fn samples() -> Vec<Point> {
        vec![
            Point::new(C64::new(0.3, 0.2), C64::new(1.5, -0.5)),
            Point::new(C64::new(-2.0, 0.7), C64::new(0.1, 0.4)),
            Point::new(C64::new(1.7, -0.3), C64::new(-3.0, 0.0)),
        ]
    }

    #[test]
    fn constant_path_is_one() {
        let p = Path1::constant(Point::new(C64::new(0.4, 0.1), C64::new(1.0, 0.0)));
        let w = parallel_transport(&p, &Connection::base(), 3, &q()).unwrap();
        assert!((&w - &AlgebraSeries::one(3)).max_abs() < 1e-15);
    }

    #[test]
    fn vertical_path_closed_form() {
        let pr = Params::with_eps(0.1).unwrap();
        let p = make_path("p_down_1", &pr).unwrap();
        let w = parallel_transport(&p, &Connection::base(), 4, &q()).unwrap();
        let expect = vertical_transport_closed_form(p.start().v, p.end().v, 4);
        assert!((&w - &expect).max_abs() < 1e-9);
    }

    #[test]
    fn functoriality_and_reverse() {
        let pr = Params::with_eps(0.1).unwrap();
        let c = Connection::base();
        let p = make_path("p_I", &pr).unwrap();
        let r = make_path("p_VI", &pr).unwrap();
        let wp = parallel_transport(&p, &c, 4, &q()).unwrap();
        let wr = parallel_transport(&r, &c, 4, &q()).unwrap();
        let wrp = parallel_transport(&p.then(&r).unwrap(), &c, 4, &q()).unwrap();
        assert!((&wrp - &(&wr * &wp)).max_abs() < 1e-8);
        let back = parallel_transport(&p.reverse(), &c, 4, &q()).unwrap();
        assert!((&(&back * &wp) - &AlgebraSeries::one(4)).max_abs() < 1e-8);
    }

    #[test]
    fn reparametrization_invariance() {
        let pr = Params::with_eps(0.1).unwrap();
        let c = Connection::base();
        let p = make_path("p_II", &pr).unwrap();
        let g = p.reparam(|r| r * r, |x| x.sqrt());
        let a = parallel_transport(&p, &c, 4, &q()).unwrap();
        let b = parallel_transport(&g, &c, 4, &q()).unwrap();
        assert!((&a - &b).max_abs() < 1e-8);
    }

    #[test]
    fn flatness_at_samples() {
        for perm in crate::dk2::Perm::all() {
            let rep = flatness_checks(&Connection { perm }, &samples(), 4).unwrap();
            assert!(rep.fake_flatness < 1e-12, "{perm}: {rep:?}");
            assert!(rep.two_curvature < 1e-12);
            assert!(rep.wedge_magnitude > 0.1);
        }
    }

    #[test]
    fn pullbacks_match_jacobians() {
        for base in crate::dk2::Perm::all() {
            for tau in Tau::ALL {
                let d = pullback_consistency(&Connection { perm: base }, tau, &samples()).unwrap();
                assert!(d < 1e-12, "{} on {base}: {d}", tau.name());
            }
        }
    }

    #[test]
    fn transported_image_matches_pullback() {
        let pr = Params::with_eps(0.1).unwrap();
        let p = make_path("p_II", &pr).unwrap();
        for tau in Tau::ALL {
            let a = parallel_transport(&p.map(tau), &Connection::base(), 3, &q()).unwrap();
            let b = parallel_transport(&p, &Connection::base().pullback(tau), 3, &q()).unwrap();
            assert!((&a - &b).max_abs() < 1e-8, "{}", tau.name());
        }
    }

    #[test]
    fn horizontal_two_path_vanishes() {
        let pr = Params::with_eps(0.1).unwrap();
        let p = make_2path("P_v=a", &pr).unwrap();
        let h = surface_holonomy(&p, &Connection::base(), 3, &q()).unwrap();
        assert!(h.max_abs() == 0.0);
        let g = globularity_check(&p, &Connection::base(), 3, &q()).unwrap();
        assert!(g.max_deviation < 1e-8, "{g:?}");
    }

    #[test]
    fn globularity_p_v() {
        let pr = Params::with_eps(0.05).unwrap();
        for key in ["P_V", "Q_VI"] {
            let p = make_2path(key, &pr).unwrap();
            let g = globularity_check(&p, &Connection::base(), 3, &q()).unwrap();
            assert!(g.max_deviation < 1e-8, "{g:?}");
        }
    }

    #[test]
    fn p_v_grade_two_limit() {
        let eps = 1e-3;
        let pr = Params::with_eps(eps).unwrap();
        let h = surface_holonomy(&make_2path("P_V", &pr).unwrap(), &Connection::base(), 2, &q()).unwrap();
        let le = eps.ln();
        let l = h.coeff(&ModWord::bare(ModLetter::L));
        let r = h.coeff(&ModWord::bare(ModLetter::R));
        let el = -PI * PI / 6.0 - le * le / 2.0;
        let er = -le * le / 2.0;
        assert!((l - el).norm() < 0.05, "{l} vs {el}");
        assert!((r - er).norm() < 0.05, "{r} vs {er}");
    }
}
