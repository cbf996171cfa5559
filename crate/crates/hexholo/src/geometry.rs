//! Configuration-space geometry on `ℂ^{××} × ℂ^×` with coordinates `(z, v)`:
//! the path and 2-path catalog, the KZ 2-connection `(∇, Δ)` and the `S₃`
//! maps `τ`. Every path is written once over [`Dual`] numbers so values and
//! analytic derivatives come from the same formula.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::dk2::{AlgebraSeries, BimoduleSeries, Perm, T12, T13, T23};
use crate::error::{Error, Result};

type C64 = Complex64;

/// Forward-mode dual number `v + d·δ` over `ℂ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: C64,
    pub d: C64,
}

impl Dual {
    pub fn var(x: f64) -> Dual {
        Dual { v: C64::new(x, 0.0), d: C64::new(1.0, 0.0) }
    }

    pub fn cst(x: f64) -> Dual {
        Dual { v: C64::new(x, 0.0), d: C64::new(0.0, 0.0) }
    }

    pub fn ccst(c: C64) -> Dual {
        Dual { v: c, d: C64::new(0.0, 0.0) }
    }

    /// The real part of the value, used to pick a piece of a piecewise formula.
    pub fn re(&self) -> f64 {
        self.v.re
    }

    pub fn exp(self) -> Dual {
        let e = self.v.exp();
        Dual { v: e, d: e * self.d }
    }

    /// `e^{iπ·self}`.
    pub fn cis_pi(self) -> Dual {
        (self * Dual::ccst(C64::new(0.0, PI))).exp()
    }

    pub fn recip(self) -> Dual {
        let inv = self.v.inv();
        Dual { v: inv, d: -self.d * inv * inv }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Dual) -> Dual {
        self * o.recip()
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, o: f64) -> Dual {
        self + Dual::cst(o)
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, o: f64) -> Dual {
        self - Dual::cst(o)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual { v: self.v * o, d: self.d * o }
    }
}

impl Mul<C64> for Dual {
    type Output = Dual;
    fn mul(self, o: C64) -> Dual {
        Dual { v: self.v * o, d: self.d * o }
    }
}

fn rsub(x: f64, d: Dual) -> Dual {
    Dual::cst(x) - d
}

/// A point `(z, v)` of `ℂ^{××} × ℂ^×`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub z: C64,
    pub v: C64,
}

impl Point {
    pub fn new(z: C64, v: C64) -> Self {
        Point { z, v }
    }

    /// Distance to the singular locus `{z = 0} ∪ {z = 1} ∪ {v = 0}`.
    pub fn clearance(&self) -> f64 {
        self.z.norm().min((self.z - 1.0).norm()).min(self.v.norm())
    }

    pub fn dist(&self, o: &Point) -> f64 {
        (self.z - o.z).norm().max((self.v - o.v).norm())
    }

    pub fn check(&self, threshold: f64) -> Result<()> {
        let c = self.clearance();
        if c < threshold || !c.is_finite() {
            let what = if self.v.norm() <= c { "v = 0" } else if self.z.norm() <= c { "z = 0" } else { "z = 1" };
            return Err(Error::Singular { what: what.into(), distance: c });
        }
        Ok(())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(z = {}, v = {})", self.z, self.v)
    }
}

/// Tangent vector `(dz, dv)`.
pub type Tangent = (C64, C64);

/// Evaluation threshold for the singular locus.
pub const SINGULAR_THRESHOLD: f64 = 1e-9;

/// Path parameters: `ε ∈ (0, 1/4]` and the free base value `a ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub eps: f64,
    pub a: C64,
}

impl Params {
    pub fn new(eps: f64, a: C64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.25) {
            return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1/4]")));
        }
        if a.norm() == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::Domain("a must be a finite nonzero complex number".into()));
        }
        Ok(Params { eps, a })
    }

    pub fn with_eps(eps: f64) -> Result<Self> {
        Params::new(eps, C64::new(1.0, 0.0))
    }
}

type PathFn = Arc<dyn Fn(Dual) -> (Dual, Dual) + Send + Sync>;
type SurfFn = Arc<dyn Fn(Dual, Dual) -> (Dual, Dual) + Send + Sync>;
type CornerFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A piecewise-smooth 1-path `[0, 1] → ℂ^{××} × ℂ^×`.
#[derive(Clone)]
pub struct Path1 {
    pub key: String,
    f: PathFn,
    corners: Vec<f64>,
}

impl fmt::Debug for Path1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path1({}, {} -> {})", self.key, self.start(), self.end())
    }
}

impl Path1 {
    pub fn new<F>(key: impl Into<String>, corners: Vec<f64>, f: F) -> Self
    where
        F: Fn(Dual) -> (Dual, Dual) + Send + Sync + 'static,
    {
        let mut corners: Vec<f64> = corners.into_iter().filter(|c| *c > 0.0 && *c < 1.0).collect();
        corners.sort_by(|a, b| a.partial_cmp(b).expect("NaN corner"));
        corners.dedup();
        Path1 { key: key.into(), f: Arc::new(f), corners }
    }

    /// Constant path at `p`.
    pub fn constant(p: Point) -> Self {
        Path1::new(format!("1_{p}"), vec![], move |_| (Dual::ccst(p.z), Dual::ccst(p.v)))
    }

    /// Interior breakpoints where the path may fail to be smooth.
    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    pub fn at(&self, r: f64) -> Point {
        let (z, v) = (self.f)(Dual::cst(r));
        Point::new(z.v, v.v)
    }

    /// Analytic derivative; at a corner this is the right-hand derivative.
    pub fn tangent(&self, r: f64) -> Tangent {
        let (z, v) = (self.f)(Dual::var(r));
        (z.d, v.d)
    }

    pub fn eval_dual(&self, r: Dual) -> (Dual, Dual) {
        (self.f)(r)
    }

    pub fn start(&self) -> Point {
        self.at(0.0)
    }

    pub fn end(&self) -> Point {
        self.at(1.0)
    }

    /// Runs `self` and then `next` at double speed; written `next·self` in composition order.
    pub fn then(&self, next: &Path1) -> Result<Path1> {
        let gap = self.end().dist(&next.start());
        if gap > 1e-12 * (1.0 + self.end().z.norm().max(self.end().v.norm())) {
            return Err(Error::EndpointMismatch(format!(
                "{} ends at {} but {} starts at {}",
                self.key,
                self.end(),
                next.key,
                next.start()
            )));
        }
        let (p, q) = (self.f.clone(), next.f.clone());
        let mut corners: Vec<f64> = self.corners.iter().map(|c| c / 2.0).collect();
        corners.push(0.5);
        corners.extend(next.corners.iter().map(|c| 0.5 + c / 2.0));
        Ok(Path1::new(format!("{}{}", next.key, self.key), corners, move |r| {
            if r.re() <= 0.5 {
                p(r * 2.0)
            } else {
                q(r * 2.0 - 1.0)
            }
        }))
    }

    /// `p ∘ ι` with `ι(r) = 1 − r`.
    pub fn reverse(&self) -> Path1 {
        let f = self.f.clone();
        let corners = self.corners.iter().map(|c| 1.0 - c).collect();
        Path1::new(format!("[{}∘ι]", self.key), corners, move |r| f(rsub(1.0, r)))
    }

    /// `p ∘ g` for a monotone bijection `g` of `[0, 1]`; corners move with `g⁻¹`.
    pub fn reparam<G>(&self, g: G, g_inv: impl Fn(f64) -> f64) -> Path1
    where
        G: Fn(Dual) -> Dual + Send + Sync + 'static,
    {
        let f = self.f.clone();
        let corners = self.corners.iter().map(|&c| g_inv(c)).collect();
        Path1::new(format!("{}∘g", self.key), corners, move |r| f(g(r)))
    }

    /// Image under one of the `S₃` maps.
    pub fn map(&self, tau: Tau) -> Path1 {
        let f = self.f.clone();
        Path1::new(format!("{}({})", tau.name(), self.key), self.corners.clone(), move |r| {
            let (z, v) = f(r);
            tau.apply_dual(z, v)
        })
    }

    /// Minimum distance to the singular locus on an `n`-point grid.
    pub fn clearance(&self, n: usize) -> f64 {
        (0..=n).map(|i| self.at(i as f64 / n as f64).clearance()).fold(f64::INFINITY, f64::min)
    }

    pub fn check_clearance(&self, n: usize, threshold: f64) -> Result<f64> {
        let c = self.clearance(n);
        if !(c >= threshold) {
            return Err(Error::Singular { what: format!("path {}", self.key), distance: c });
        }
        Ok(c)
    }

    /// The identity 2-path `1_p`.
    pub fn identity_2path(&self) -> Path2 {
        let f = self.f.clone();
        let corners = self.corners.clone();
        Path2::new(format!("1_{}", self.key), vec![], move |_| corners.clone(), move |_, r| f(r))
    }
}

/// `qp`: first `p`, then `q`.
pub fn path_concat(q: &Path1, p: &Path1) -> Result<Path1> {
    p.then(q)
}

pub fn path_reverse(p: &Path1) -> Path1 {
    p.reverse()
}

/// A 2-path `[0, 1]² → ℂ^{××} × ℂ^×` from the cross-section `s = 0` to `s = 1`.
#[derive(Clone)]
pub struct Path2 {
    pub key: String,
    f: SurfFn,
    r_corners: CornerFn,
    s_corners: Vec<f64>,
}

impl fmt::Debug for Path2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path2({})", self.key)
    }
}

impl Path2 {
    pub fn new<F, K>(key: impl Into<String>, s_corners: Vec<f64>, r_corners: K, f: F) -> Self
    where
        F: Fn(Dual, Dual) -> (Dual, Dual) + Send + Sync + 'static,
        K: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Path2 { key: key.into(), f: Arc::new(f), r_corners: Arc::new(r_corners), s_corners }
    }

    pub fn at(&self, s: f64, r: f64) -> Point {
        let (z, v) = (self.f)(Dual::cst(s), Dual::cst(r));
        Point::new(z.v, v.v)
    }

    /// `∂𝒫/∂s`.
    pub fn ds(&self, s: f64, r: f64) -> Tangent {
        let (z, v) = (self.f)(Dual::var(s), Dual::cst(r));
        (z.d, v.d)
    }

    /// `∂𝒫/∂r`.
    pub fn dr(&self, s: f64, r: f64) -> Tangent {
        let (z, v) = (self.f)(Dual::cst(s), Dual::var(r));
        (z.d, v.d)
    }

    pub fn s_corners(&self) -> &[f64] {
        &self.s_corners
    }

    /// Breakpoints of the cross-section at `s`.
    pub fn r_corners(&self, s: f64) -> Vec<f64> {
        let mut c: Vec<f64> = (self.r_corners)(s).into_iter().filter(|x| *x > 0.0 && *x < 1.0).collect();
        c.sort_by(|a, b| a.partial_cmp(b).expect("NaN corner"));
        c.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        c
    }

    /// The cross-sectional 1-path `𝒫^s`.
    pub fn cross_section(&self, s: f64) -> Path1 {
        let f = self.f.clone();
        Path1::new(format!("{}^{s}", self.key), self.r_corners(s), move |r| f(Dual::cst(s), r))
    }

    pub fn source(&self) -> Path1 {
        self.cross_section(0.0)
    }

    pub fn target(&self) -> Path1 {
        self.cross_section(1.0)
    }

    /// `𝒫 ∘ (ι × 1)`: swaps source and target, negating the 2-holonomy.
    pub fn reverse(&self) -> Path2 {
        let f = self.f.clone();
        let k = self.r_corners.clone();
        Path2::new(
            format!("←{}", self.key),
            self.s_corners.iter().map(|c| 1.0 - c).collect(),
            move |s| k(1.0 - s),
            move |s, r| f(rsub(1.0, s), r),
        )
    }

    /// Vertical composite: `self` for `s ≤ 1/2`, then `next`.
    pub fn vconcat(&self, next: &Path2) -> Result<Path2> {
        let (a, b) = (self.target(), next.source());
        for i in 0..=64 {
            let r = i as f64 / 64.0;
            if a.at(r).dist(&b.at(r)) > 1e-10 {
                return Err(Error::EndpointMismatch(format!("{} target vs {} source at r = {r}", self.key, next.key)));
            }
        }
        let (f, g) = (self.f.clone(), next.f.clone());
        let (kf, kg) = (self.r_corners.clone(), next.r_corners.clone());
        let mut sc: Vec<f64> = self.s_corners.iter().map(|c| c / 2.0).collect();
        sc.push(0.5);
        sc.extend(next.s_corners.iter().map(|c| 0.5 + c / 2.0));
        Ok(Path2::new(
            format!("{}·{}", next.key, self.key),
            sc,
            move |s| if s <= 0.5 { kf(2.0 * s) } else { kg(2.0 * s - 1.0) },
            move |s, r| if s.re() <= 0.5 { f(s * 2.0, r) } else { g(s * 2.0 - 1.0, r) },
        ))
    }

    /// Horizontal composite `next·self`: `self` on `r ≤ 1/2`, then `next`.
    pub fn hconcat(&self, next: &Path2) -> Result<Path2> {
        for i in 0..=64 {
            let s = i as f64 / 64.0;
            if self.at(s, 1.0).dist(&next.at(s, 0.0)) > 1e-10 {
                return Err(Error::EndpointMismatch(format!("{} and {} do not meet at s = {s}", self.key, next.key)));
            }
        }
        let (f, g) = (self.f.clone(), next.f.clone());
        let (kf, kg) = (self.r_corners.clone(), next.r_corners.clone());
        let mut sc = self.s_corners.clone();
        sc.extend(next.s_corners.iter().copied());
        Ok(Path2::new(
            format!("{}{}", next.key, self.key),
            sc,
            move |s| {
                let mut c: Vec<f64> = kf(s).into_iter().map(|x| x / 2.0).collect();
                c.push(0.5);
                c.extend(kg(s).into_iter().map(|x| 0.5 + x / 2.0));
                c
            },
            move |s, r| if r.re() <= 0.5 { f(s, r * 2.0) } else { g(s, r * 2.0 - 1.0) },
        ))
    }

    /// Image under one of the `S₃` maps.
    pub fn map(&self, tau: Tau) -> Path2 {
        let f = self.f.clone();
        let k = self.r_corners.clone();
        Path2::new(format!("{}({})", tau.name(), self.key), self.s_corners.clone(), move |s| k(s), move |s, r| {
            let (z, v) = f(s, r);
            tau.apply_dual(z, v)
        })
    }

    /// Minimum distance to the singular locus on an `n × n` grid.
    pub fn clearance(&self, n: usize) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                m = m.min(self.at(i as f64 / n as f64, j as f64 / n as f64).clearance());
            }
        }
        m
    }

    /// The `r = 0, 1` edges are constant, relative to the size of the endpoints.
    pub fn check_boundary(&self, n: usize) -> Result<()> {
        let (p0, p1) = (self.at(0.0, 0.0), self.at(0.0, 1.0));
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let d0 = self.at(s, 0.0).dist(&p0) / p0.z.norm().max(p0.v.norm()).max(1.0);
            let d1 = self.at(s, 1.0).dist(&p1) / p1.z.norm().max(p1.v.norm()).max(1.0);
            if d0 > 1e-10 || d1 > 1e-10 {
                return Err(Error::Boundary {
                    name: self.key.clone(),
                    detail: format!("edge not constant at s = {s}: {d0:.2e}, {d1:.2e}"),
                });
            }
        }
        Ok(())
    }
}

/// The five nontrivial `S₃` maps on `(z, v)`; the `w` coordinate is dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tau {
    T12,
    T23,
    T13,
    T12_3,
    T1_23,
}

impl Tau {
    pub const ALL: [Tau; 5] = [Tau::T12, Tau::T23, Tau::T13, Tau::T12_3, Tau::T1_23];

    pub fn name(&self) -> &'static str {
        match self {
            Tau::T12 => "τ12",
            Tau::T23 => "τ23",
            Tau::T13 => "τ13",
            Tau::T12_3 => "τ(12)3",
            Tau::T1_23 => "τ1(23)",
        }
    }

    pub fn parse(key: &str) -> Result<Tau> {
        match key {
            "12" => Ok(Tau::T12),
            "23" => Ok(Tau::T23),
            "13" => Ok(Tau::T13),
            "(12)3" | "312" => Ok(Tau::T12_3),
            "1(23)" | "231" => Ok(Tau::T1_23),
            _ => Err(Error::Domain(format!("unknown τ key {key:?}"))),
        }
    }

    /// The relabelling realizing `τ*`.
    pub fn perm(&self) -> Perm {
        match self {
            Tau::T12 => Perm::P213,
            Tau::T23 => Perm::P132,
            Tau::T13 => Perm::P321,
            Tau::T12_3 => Perm::P231,
            Tau::T1_23 => Perm::P312,
        }
    }

    pub fn apply_dual(&self, z: Dual, v: Dual) -> (Dual, Dual) {
        match self {
            Tau::T12 => (z / (z - 1.0), rsub(1.0, z) * v),
            Tau::T23 => (z.recip(), z * v),
            Tau::T13 => (rsub(1.0, z), -v),
            Tau::T12_3 => (rsub(1.0, z).recip(), (z - 1.0) * v),
            Tau::T1_23 => ((z - 1.0) / z, -(z * v)),
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let (z, v) = self.apply_dual(Dual::ccst(p.z), Dual::ccst(p.v));
        Point::new(z.v, v.v)
    }

    /// Jacobian `∂(z', v')/∂(z, v)` as rows `[[∂z'/∂z, ∂z'/∂v], [∂v'/∂z, ∂v'/∂v]]`.
    pub fn jacobian(&self, p: Point) -> [[C64; 2]; 2] {
        let (zz, vz) = self.apply_dual(Dual { v: p.z, d: C64::new(1.0, 0.0) }, Dual::ccst(p.v));
        let (zv, vv) = self.apply_dual(Dual::ccst(p.z), Dual { v: p.v, d: C64::new(1.0, 0.0) });
        [[zz.d, zv.d], [vz.d, vv.d]]
    }
}

pub fn tau_transform_path(tau: Tau, p: &Path1) -> Path1 {
    p.map(tau)
}

pub fn tau_transform_path2(tau: Tau, p: &Path2) -> Path2 {
    p.map(tau)
}

/// `∇(X, Y) = (X/z + Y/(z−1)) dz + Λ/v dv` and `Δ = (𝓛'/(zv) + 𝓡'/((z−1)v)) dz∧dv`,
/// relabelled by `perm`: `X = t_{σ1σ2}`, `Y = t_{σ2σ3}` with relators by the pair rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Connection {
    pub perm: Perm,
}

/// Coefficients `(δ_L, δ_R)` of `rel(ij)` in the basis `𝓛, 𝓡`.
fn relator_coeffs(i: u8, j: u8) -> [f64; 2] {
    match (i.min(j), i.max(j)) {
        (1, 2) => [1.0, 0.0],
        (2, 3) => [0.0, 1.0],
        (1, 3) => [-1.0, -1.0],
        _ => unreachable!("relator pair out of range"),
    }
}

impl Default for Connection {
    fn default() -> Self {
        Connection::base()
    }
}

impl Connection {
    pub fn base() -> Self {
        Connection { perm: Perm::ID }
    }

    /// `τ*c`.
    pub fn pullback(&self, tau: Tau) -> Connection {
        Connection { perm: tau.perm().then(&self.perm) }
    }

    pub fn label(&self) -> String {
        format!("∇_{}", self.perm)
    }

    /// Letters carrying the `dz/z` and `dz/(z−1)` terms.
    pub fn letters(&self) -> (u8, u8) {
        let s = self.perm;
        (crate::dk2::pair_letter(s.apply(1), s.apply(2)), crate::dk2::pair_letter(s.apply(2), s.apply(3)))
    }

    /// Relator coefficient vectors replacing `𝓛` and `𝓡`.
    pub fn relators(&self) -> ([f64; 2], [f64; 2]) {
        let s = self.perm;
        (relator_coeffs(s.apply(1), s.apply(2)), relator_coeffs(s.apply(2), s.apply(3)))
    }

    /// Components `[A_z, A_v]` of `∇`, each as coefficients of `(t12, t13, t23)`,
    /// over dual numbers so partial derivatives come out exactly.
    pub fn nabla_components(&self, z: Dual, v: Dual) -> [[Dual; 3]; 2] {
        let (x, y) = self.letters();
        let zero = Dual::cst(0.0);
        let mut az = [zero; 3];
        az[x as usize] = az[x as usize] + z.recip();
        az[y as usize] = az[y as usize] + (z - 1.0).recip();
        let lv = v.recip();
        [az, [lv; 3]]
    }

    /// `∇[u]` as coefficients of `(t12, t13, t23)`.
    pub fn nabla_coeffs(&self, p: Point, u: Tangent) -> Result<[C64; 3]> {
        p.check(SINGULAR_THRESHOLD)?;
        let [az, av] = self.nabla_components(Dual::ccst(p.z), Dual::ccst(p.v));
        let mut out = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            out[i] = az[i].v * u.0 + av[i].v * u.1;
        }
        Ok(out)
    }

    /// `Δ[u, w]` as coefficients of `(𝓛, 𝓡)`.
    pub fn delta_coeffs(&self, p: Point, u: Tangent, w: Tangent) -> Result<[C64; 2]> {
        p.check(SINGULAR_THRESHOLD)?;
        let area = u.0 * w.1 - u.1 * w.0;
        let (l, r) = self.relators();
        let fl = area / (p.z * p.v);
        let fr = area / ((p.z - 1.0) * p.v);
        Ok([fl * l[0] + fr * r[0], fl * l[1] + fr * r[1]])
    }

    /// Both forms as series at truncation order `order`.
    pub fn eval(
        &self,
        p: Point,
        u: Tangent,
        w: Tangent,
        order: usize,
    ) -> Result<(AlgebraSeries<C64>, BimoduleSeries<C64>)> {
        let a = self.nabla_coeffs(p, u)?;
        let d = self.delta_coeffs(p, u, w)?;
        let mut alg = AlgebraSeries::zero(order);
        for l in [T12, T13, T23] {
            alg.add_monomial(vec![l], a[l as usize]);
        }
        let m = &BimoduleSeries::l(order).scale(&d[0]) + &BimoduleSeries::r(order).scale(&d[1]);
        Ok((alg, m))
    }
}

pub fn connection_eval(
    c: &Connection,
    p: Point,
    u: Tangent,
    w: Tangent,
    order: usize,
) -> Result<(AlgebraSeries<C64>, BimoduleSeries<C64>)> {
    c.eval(p, u, w, order)
}

pub fn tau_pullback(tau: Tau, c: &Connection) -> Connection {
    c.pullback(tau)
}

// ---------------------------------------------------------------------------
// The z-curves of the BRW hexagon

fn c_i(e: f64, r: Dual) -> Dual {
    r * (1.0 - 2.0 * e) + e
}

/// Möbius half-turn around `1`: `1 − ε → 1/(1 − ε)` (argument `r ∈ [0, 2]` closes the loop).
fn c_ii(e: f64, r: Dual) -> Dual {
    let ex = r.cis_pi() * e;
    rsub(2.0 - e, ex) / (ex + (2.0 - e))
}

fn c_iii(e: f64, r: Dual) -> Dual {
    rsub(1.0, c_i(e, r)).recip()
}

fn c_iv(e: f64, r: Dual) -> Dual {
    (-r).cis_pi() * (1.0 / e - 0.5) + 0.5
}

fn c_v(e: f64, r: Dual) -> Dual {
    rsub(1.0, rsub(1.0, c_i(e, rsub(1.0, r))).recip())
}

fn c_vi(e: f64, r: Dual) -> Dual {
    Dual::cst(2.0 * e) / (rsub(e, (-r).cis_pi() * (2.0 - e)))
}

fn inv(r: Dual) -> Dual {
    rsub(1.0, r)
}

fn cst(c: C64) -> Dual {
    Dual::ccst(c)
}

/// Keys accepted by [`make_path`].
pub const PATH_KEYS: [&str; 18] = [
    "c_I", "c_II", "c_III", "c_IV", "c_V", "c_VI", "p_I", "p_II", "p_III", "p_IV", "p_V", "p_VI", "q_IV", "q_V",
    "q_VI", "p_down_1", "q_down_1", "q_searrow",
];

/// Keys accepted by [`make_2path`].
pub const PATH2_KEYS: [&str; 8] = ["P_V", "P_III", "P_IV", "Q_VI", "Q_V", "Q_IV", "P_v=a", "P_L"];

/// A catalog 1-path. `c_*` keys are the bare z-curves at `v = a`.
pub fn make_path(key: &str, prm: &Params) -> Result<Path1> {
    let e = prm.eps;
    let a = prm.a;
    let p = match key {
        "c_I" => Path1::new(key, vec![], move |r| (c_i(e, r), cst(a))),
        "c_II" => Path1::new(key, vec![], move |r| (c_ii(e, r), cst(a))),
        "c_III" => Path1::new(key, vec![], move |r| (c_iii(e, r), cst(a))),
        "c_IV" => Path1::new(key, vec![], move |r| (c_iv(e, r), cst(a))),
        "c_V" => Path1::new(key, vec![], move |r| (c_v(e, r), cst(a))),
        "c_VI" => Path1::new(key, vec![], move |r| (c_vi(e, r), cst(a))),
        "p_I" => Path1::new(key, vec![], move |r| (c_i(e, inv(r)), cst(a))),
        "p_II" => Path1::new(key, vec![], move |r| (c_ii(e, r), cst(a))),
        "p_III" => {
            let b = a / (e - 1.0);
            Path1::new(key, vec![], move |r| Tau::T12_3.apply_dual(c_i(e, r), cst(b)))
        }
        "p_IV" => {
            let b = a * e / (1.0 - e);
            Path1::new(key, vec![], move |r| (c_iv(e, r), cst(b)))
        }
        "p_V" => {
            let b = a / (e - 1.0);
            Path1::new(key, vec![], move |r| Tau::T1_23.apply_dual(c_i(e, inv(r)), cst(b)))
        }
        "p_VI" => Path1::new(key, vec![], move |r| (c_vi(e, inv(r)), cst(a))),
        "q_IV" => Path1::new(key, vec![], move |r| Tau::T12.apply_dual(c_ii(e, r + 1.0), cst(-a))),
        "q_V" => Path1::new(key, vec![], move |r| Tau::T12.apply_dual(c_i(e, r), cst(-a))),
        "q_VI" => Path1::new(key, vec![], move |r| Tau::T12_3.apply_dual(c_iv(e, inv(r)), cst(-a * e))),
        // vertical at z = 1/ε from a to aε/(1−ε)
        "p_down_1" => Path1::new(key, vec![], move |r| {
            (Dual::cst(1.0 / e), rsub(1.0, c_i(e, r)) * (a / (1.0 - e)))
        }),
        // vertical at z = 1 − 1/ε from aε/(1−ε) to −aε
        "q_down_1" => Path1::new(key, vec![], move |r| {
            (Dual::cst(1.0 - 1.0 / e), (c_iv(e, r) - 1.0).recip() * a)
        }),
        // from (ε/(ε−1), a) to (ε, (ε−1)a), half-turns in both coordinates
        "q_searrow" => Path1::new(key, vec![], move |r| {
            let ex = r.cis_pi();
            (Dual::cst(2.0 * e) / (ex * (e - 2.0) + e), (ex * (1.0 - e / 2.0) + e / 2.0) * a)
        }),
        _ => return Err(Error::Domain(format!("unknown path key {key:?}"))),
    };
    p.check_clearance(1000, SINGULAR_THRESHOLD.max(prm.eps * 1e-3))?;
    Ok(p)
}

/// A catalog 2-path; boundary conditions and clearance are verified on a grid.
pub fn make_2path(key: &str, prm: &Params) -> Result<Path2> {
    let e = prm.eps;
    let a = prm.a;
    let p = match key {
        // p_V ⇛ p↓¹ (c_V∘ι, a)
        "P_V" => {
            let pv = make_path("p_V", prm)?;
            Path2::new(key, vec![], |s| vec![s / 2.0, s], move |s, r| {
                if r.re() <= s.re() / 2.0 {
                    (c_v(e, inv(r * 2.0)), cst(a))
                } else if r.re() <= s.re() {
                    (c_v(e, inv(s)), rsub(1.0, c_i(e, r * 2.0 - s)) * (a / (1.0 - e)))
                } else {
                    pv.eval_dual(r)
                }
            })
        }
        // p_III ⇛ p↓₁ (c_III, a)
        "P_III" => {
            let piii = make_path("p_III", prm)?;
            Path2::new(key, vec![], |s| vec![s / 2.0, s], move |s, r| {
                if r.re() <= s.re() / 2.0 {
                    (c_iii(e, r * 2.0), cst(a))
                } else if r.re() <= s.re() {
                    (c_iii(e, s), rsub(1.0, c_i(e, r * 2.0 - s)) * (a / (1.0 - e)))
                } else {
                    piii.eval_dual(r)
                }
            })
        }
        // p_IV p↓₁ ⇛ p↓¹ (c_IV, a)
        "P_IV" => {
            let piv = make_path("p_IV", prm)?;
            Path2::new(key, vec![], |s| vec![s / 2.0, (1.0 + s) / 2.0], move |s, r| {
                if r.re() <= s.re() / 2.0 {
                    (c_iv(e, r * 2.0), cst(a))
                } else if r.re() <= (1.0 + s.re()) / 2.0 {
                    (c_iv(e, s), rsub(1.0, c_i(e, r * 2.0 - s)) * (a / (1.0 - e)))
                } else {
                    piv.eval_dual(r * 2.0 - 1.0)
                }
            })
        }
        // q_VI ⇛ q↓¹ p_VI
        "Q_VI" => {
            let pvi = make_path("p_VI", prm)?;
            let qvi = make_path("q_VI", prm)?;
            Path2::new(key, vec![], |s| vec![s / 2.0, s], move |s, r| {
                if r.re() <= s.re() / 2.0 {
                    pvi.eval_dual(r * 2.0)
                } else if r.re() <= s.re() {
                    (c_vi(e, inv(s)), c_vi(e, inv(r * 2.0 - s)).recip() * (a * e))
                } else {
                    qvi.eval_dual(r)
                }
            })
        }
        // q_V q←⁰ ⇛ q←¹ p_V
        "Q_V" => {
            let pv = make_path("p_V", prm)?;
            let qv = make_path("q_V", prm)?;
            Path2::new(key, vec![], |s| vec![s / 2.0, (1.0 + s) / 2.0], move |s, r| {
                if r.re() <= s.re() / 2.0 {
                    pv.eval_dual(r * 2.0)
                } else if r.re() <= (1.0 + s.re()) / 2.0 {
                    let scale = rsub(1.0, c_i(e, s)) * (a * e / (1.0 - e));
                    (c_v(e, inv(s)), scale / c_vi(e, inv(r * 2.0 - s)))
                } else {
                    qv.eval_dual(r * 2.0 - 1.0)
                }
            })
        }
        // q_IV ⇛ q^↓₁ p_IV
        "Q_IV" => {
            let piv = make_path("p_IV", prm)?;
            let qiv = make_path("q_IV", prm)?;
            Path2::new(key, vec![], |s| vec![s / 2.0, s], move |s, r| {
                if r.re() <= s.re() / 2.0 {
                    piv.eval_dual(r * 2.0)
                } else if r.re() <= s.re() {
                    (c_iv(e, s), (c_iv(e, r * 2.0 - s) - 1.0).recip() * a)
                } else {
                    qiv.eval_dual(r)
                }
            })
        }
        // ([c_I c_VI c_V]∘ι, a) ⇛ (c_IV c_III c_II, a), straight-line in z at v = a
        "P_v=a" => {
            let src = make_path("p_I", prm)?.then(&make_path("p_VI", prm)?)?.then(&make_path("c_V", prm)?.reverse())?;
            let tgt = make_path("c_II", prm)?.then(&make_path("c_III", prm)?)?.then(&make_path("c_IV", prm)?)?;
            straight_homotopy(key, &src, &tgt)?
        }
        // (c_VI, (ε−1)a) q_VI ⇛ q↘ (c_VI(r+1), a); the left congruence
        "P_L" => {
            let qvi = make_path("q_VI", prm)?;
            let qse = make_path("q_searrow", prm)?;
            Path2::new(key, vec![], |s| vec![(1.0 - s) / 2.0, 1.0 - s / 2.0], move |s, r| {
                if r.re() <= (1.0 - s.re()) / 2.0 {
                    qvi.eval_dual(r * 2.0)
                } else if r.re() <= 1.0 - s.re() / 2.0 {
                    (c_vi(e, r * 2.0 + s * 2.0 - 1.0), c_iv(e, s - 1.0) * (a * e))
                } else {
                    qse.eval_dual(r * 2.0 - 1.0)
                }
            })
        }
        _ => return Err(Error::Domain(format!("unknown 2-path key {key:?}"))),
    };
    p.check_boundary(64)?;
    let c = p.clearance(200);
    if !(c >= SINGULAR_THRESHOLD.max(prm.eps * 1e-3)) {
        return Err(Error::Singular { what: format!("2-path {key}"), distance: c });
    }
    Ok(p)
}

/// Straight-line homotopy `(1−s)·p + s·q` in `(z, v)`.
pub fn straight_homotopy(key: &str, p: &Path1, q: &Path1) -> Result<Path2> {
    if p.start().dist(&q.start()) > 1e-10 || p.end().dist(&q.end()) > 1e-10 {
        return Err(Error::EndpointMismatch(format!("{key}: {} and {} have different endpoints", p.key, q.key)));
    }
    let (p, q) = (p.clone(), q.clone());
    let mut corners: Vec<f64> = p.corners().to_vec();
    corners.extend_from_slice(q.corners());
    Ok(Path2::new(key, vec![], move |_| corners.clone(), move |s, r| {
        let (z0, v0) = p.eval_dual(r);
        let (z1, v1) = q.eval_dual(r);
        let t = rsub(1.0, s);
        (z0 * t + z1 * s, v0 * t + v1 * s)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prm(e: f64) -> Params {
        Params::with_eps(e).unwrap()
    }

    #[test]
    fn dual_derivatives() {
        let f = |x: Dual| (x * x).recip() + x.cis_pi();
        let x = 0.3;
        let d = f(Dual::var(x)).d;
        let h = 1e-6;
        let fd = (f(Dual::cst(x + h)).v - f(Dual::cst(x - h)).v) / (2.0 * h);
        assert!((d - fd).norm() < 1e-6);
    }

    #[test]
    fn p_i_endpoints() {
        let p = make_path("p_I", &prm(0.1)).unwrap();
        assert!((p.at(0.0).z - 0.9).norm() < 1e-15);
        assert!((p.at(1.0).z - 0.1).norm() < 1e-15);
    }

    #[test]
    fn hexagon_closes() {
        let pr = prm(0.1);
        let lhs = make_path("p_I", &pr).unwrap().then(&make_path("p_VI", &pr).unwrap()).unwrap();
        let lhs = lhs.then(&make_path("p_V", &pr).unwrap()).unwrap();
        let rhs = make_path("p_II", &pr).unwrap().then(&make_path("p_III", &pr).unwrap()).unwrap();
        let rhs = rhs.then(&make_path("p_IV", &pr).unwrap()).unwrap();
        assert!(lhs.start().dist(&rhs.start()) < 1e-12);
        assert!(lhs.end().dist(&rhs.end()) < 1e-12);
    }

    #[test]
    fn concat_speed_two() {
        let pr = prm(0.1);
        let p = make_path("p_I", &pr).unwrap();
        let q = make_path("p_VI", &pr).unwrap();
        let qp = path_concat(&q, &p).unwrap();
        assert!(qp.at(0.25).dist(&p.at(0.5)) < 1e-15);
        let back = p.then(&p.reverse()).unwrap();
        assert!(back.end().dist(&p.start()) < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let p = Point::new(C64::new(0.3, 0.2), C64::new(1.5, -0.5));
        let q = Tau::T23.apply(p);
        assert!((q.z - 1.0 / p.z).norm() < 1e-15 && (q.v - p.z * p.v).norm() < 1e-15);
    }

    #[test]
    fn connection_examples() {
        let c = Connection::base();
        let p = Point::new(C64::new(0.3, 0.2), C64::new(1.5, -0.5));
        let hz = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let hz2 = (C64::new(0.0, 2.0), C64::new(0.0, 0.0));
        assert_eq!(c.delta_coeffs(p, hz, hz2).unwrap(), [C64::new(0.0, 0.0); 2]);
        let vv = (C64::new(0.0, 0.0), C64::new(2.0, 0.0));
        let a = c.nabla_coeffs(p, vv).unwrap();
        for x in a {
            assert!((x - 2.0 / p.v).norm() < 1e-15);
        }
        let d1 = c.delta_coeffs(p, hz, vv).unwrap();
        let d2 = c.delta_coeffs(p, vv, hz).unwrap();
        assert!((d1[0] + d2[0]).norm() < 1e-15 && (d1[1] + d2[1]).norm() < 1e-15);
        assert!(c.nabla_coeffs(Point::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)), vv).is_err());
    }

    #[test]
    fn tau12_pullback_pattern() {
        // τ12*∇ ≡ ∇(t12, t13, t23)
        let c = Connection::base().pullback(Tau::T12);
        assert_eq!(c.letters(), (T12, T13));
    }

    fn fd_check(name: &str, f: impl Fn(f64) -> Point, d: impl Fn(f64) -> Tangent, corners: &[f64]) {
        let h = 1e-6;
        for i in 1..200 {
            let r = i as f64 / 200.0;
            if corners.iter().any(|c| (c - r).abs() < 1e-4) {
                continue;
            }
            let (a, b) = (f(r - h), f(r + h));
            let fd = ((b.z - a.z) / (2.0 * h), (b.v - a.v) / (2.0 * h));
            let an = d(r);
            let scale = 1.0 + an.0.norm().max(an.1.norm());
            assert!((fd.0 - an.0).norm() < 1e-6 * scale, "{name} dz at {r}: {} vs {}", fd.0, an.0);
            assert!((fd.1 - an.1).norm() < 1e-6 * scale, "{name} dv at {r}: {} vs {}", fd.1, an.1);
        }
    }

    #[test]
    fn catalog_derivatives() {
        let pr = Params::new(0.07, C64::new(0.8, 0.3)).unwrap();
        for key in PATH_KEYS {
            let p = make_path(key, &pr).unwrap();
            fd_check(key, |r| p.at(r), |r| p.tangent(r), p.corners());
        }
        for key in PATH2_KEYS {
            let p = make_2path(key, &pr).unwrap();
            for s in [0.0, 0.3, 0.77, 1.0] {
                let c = p.r_corners(s);
                fd_check(key, |r| p.at(s, r), |r| p.dr(s, r), &c);
            }
            for r in [0.1, 0.45, 0.9] {
                let sc: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).filter(|s| {
                    p.r_corners(*s).iter().any(|c| (c - r).abs() < 2e-3)
                }).collect();
                fd_check(key, |s| p.at(s, r), |s| p.ds(s, r), &sc);
            }
        }
    }

    #[test]
    fn two_path_boundaries() {
        let pr = prm(0.05);
        let get = |k: &str| make_path(k, &pr).unwrap();
        let cases: Vec<(&str, Path1)> = vec![
            ("P_V", get("p_V")),
            ("P_III", get("p_III")),
            ("P_IV", get("p_down_1").then(&get("p_IV")).unwrap()),
            ("Q_VI", get("q_VI")),
            ("Q_IV", get("q_IV")),
        ];
        for (k, src) in cases {
            let p = make_2path(k, &pr).unwrap();
            for i in 0..=50 {
                let r = i as f64 / 50.0;
                assert!(p.at(0.0, r).dist(&src.at(r)) < 1e-12, "{k} source at {r}");
            }
        }
        let qiv = make_2path("Q_IV", &pr).unwrap();
        let tgt = get("p_IV").then(&get("q_down_1")).unwrap();
        for i in 0..=50 {
            let r = i as f64 / 50.0;
            assert!(qiv.at(1.0, r).dist(&tgt.at(r)) < 1e-12, "Q_IV target at {r}");
        }
        for key in PATH2_KEYS {
            let p = make_2path(key, &pr).unwrap();
            assert!(p.source().start().dist(&p.target().start()) < 1e-12);
            assert!(p.source().end().dist(&p.target().end()) < 1e-12);
        }
        let h = make_2path("P_V", &pr).unwrap().hconcat(&make_2path("P_V", &pr).unwrap().map(Tau::T13));
        assert!(h.is_err());
    }

    #[test]
    fn q_iv_circle_matches() {
        let pr = prm(0.1);
        let q = make_path("q_IV", &pr).unwrap();
        let c = make_path("c_IV", &pr).unwrap();
        for i in 0..=20 {
            let r = i as f64 / 20.0;
            assert!((q.at(r).z - c.at(r).z).norm() < 1e-12);
            assert!((q.at(r).v - pr.a / (c.at(r).z - 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn tau_composition() {
        let p = Point::new(C64::new(0.3, 0.2), C64::new(1.5, -0.5));
                for t1 in Tau::ALL {
            for t2 in Tau::ALL {
                let q = t2.apply(t1.apply(p));
                let comp = t1.perm().then(&t2.perm());
                let mut found = comp == Perm::ID && q.dist(&p) < 1e-12;
                for t in Tau::ALL {
                    if t.perm() == comp {
                        found = t.apply(p).dist(&q) < 1e-12;
                    }
                }
                assert!(found, "{} after {}", t2.name(), t1.name());
            }
        }
    }

    #[test]
    fn two_path_continuity() {
        let pr = prm(0.05);
        for key in PATH2_KEYS {
            let p = make_2path(key, &pr).unwrap();
            for i in 0..=20 {
                let s = i as f64 / 20.0;
                for c in p.r_corners(s) {
                    let d = p.at(s, c - 1e-12).dist(&p.at(s, c + 1e-12));
                    assert!(d < 1e-8, "{key} jumps by {d:.2e} at s = {s}, r = {c}");
                }
            }
        }
        let pl = make_2path("P_L", &pr).unwrap();
        let end = pl.target().end();
        assert!(end.dist(&Point::new(C64::new(0.05, 0.0), C64::new(-0.95, 0.0))) < 1e-12);
    }

    #[test]
    fn catalog_clearance() {
        for e in [0.25, 0.1, 0.01, 1e-3] {
            let pr = prm(e);
            for key in PATH_KEYS {
                assert!(make_path(key, &pr).unwrap().clearance(1000) > e * 0.4, "{key} at eps {e}");
            }
        }
    }
}
