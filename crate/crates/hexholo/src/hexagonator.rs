//! Modification series, the pre-hexagonator and the Breen checks.
//!
//! A modification `Ξ: ξ ⇛ ξ'` is stored as its value in the relator bimodule
//! together with the declared source and target; the defining contract is
//! `∂Ξ = ξ − ξ'`. Symbolic builders use [`SymCoeff`] and are checked exactly.
//! Coefficients are compared after [`SymCoeff::reduced`], which is exact but
//! identifies MZV monomials related by the weight ≤ 5 relations.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::associator::{phi_symbolic, profiles, substitute_pair, tuples_below, zeta_pqj};
use crate::coeffring::{binomial, inv_factorial, rat_int, Coeff, MzvMonomial, Rational, SymCoeff};
use crate::dk2::{
    lambda, t, t12_3, t13_bar, t1_23, AlgebraSeries, BimoduleSeries, InterchangeBasis, Perm, T12, T13, T23,
};
use crate::error::{Error, Result};
use crate::geometry::{make_2path, make_path, Connection, Params};
use crate::transport::{parallel_transport, surface_holonomy, QuadratureSpec};

type S = AlgebraSeries<SymCoeff>;
type M = BimoduleSeries<SymCoeff>;

fn sym(ipi: u32, lneps: u32, q: Rational) -> SymCoeff {
    SymCoeff::monomial(ipi, lneps, MzvMonomial::one(), q)
}

/// `(iπ)^m / m!`.
fn ipi_exp_coeff(m: usize) -> SymCoeff {
    sym(m as u32, 0, inv_factorial(m))
}

/// `(s·ln ε)^n / n!` for a sign `s = ±1`.
fn lneps_exp_coeff(n: usize, sign: i64) -> SymCoeff {
    let q = inv_factorial(n) * rat_int(if sign < 0 && n % 2 == 1 { -1 } else { 1 });
    sym(0, n as u32, q)
}

/// `e^{iπx}`.
fn exp_ipi(x: &S) -> S {
    x.scale(&SymCoeff::ipi()).exp()
}

/// `ε^x`.
fn eps_pow(x: &S) -> S {
    x.scale(&SymCoeff::lneps()).exp()
}

fn reduce_alg(s: &S) -> S {
    s.map_coeffs(|c| c.reduced())
}

fn reduce_mod(m: &M) -> M {
    m.map_coeffs(|c| c.reduced())
}

/// `Σ_{m≥1} c_m Σ_{j<m} y^j · mid · y^{m−1−j}`; its coboundary is
/// `[f(y), ∂mid]`-shaped whenever `∂mid` is a commutator with `y`.
fn commutator_lift(y: &S, mid: &M, c: impl Fn(usize) -> SymCoeff) -> M {
    let order = y.order();
    let pows: Vec<S> = (0..order).map(|k| y.pow(k)).collect();
    let mut out = M::zero(order);
    for m in 1..=order {
        let mut inner = M::zero(order);
        for j in 0..m {
            inner = &inner + &(&(&pows[j] * mid) * &pows[m - 1 - j]);
        }
        if !inner.is_zero() {
            out = &out + &inner.scale(&c(m));
        }
    }
    out
}

/// A modification together with its declared boundary.
#[derive(Clone, Debug)]
pub struct ModificationSeries {
    pub name: String,
    pub value: M,
    pub declared_source: S,
    pub declared_target: S,
}

/// Per-grade residual row shared by all reports.
#[derive(Clone, Debug, Serialize)]
pub struct GradeResidual {
    pub grade: usize,
    pub max_abs_residual: f64,
    /// Largest coefficient among the compared terms in this grade.
    pub max_term: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractReport {
    pub name: String,
    pub order: usize,
    pub per_grade: Vec<GradeResidual>,
    pub max_abs_residual: f64,
    pub pass: bool,
}

impl ModificationSeries {
    pub fn order(&self) -> usize {
        self.value.order()
    }

    /// `∂(value) − (source − target)` in reduced coefficients.
    pub fn contract_residual(&self) -> S {
        let d = &self.value.coboundary() - &(&self.declared_source - &self.declared_target);
        reduce_alg(&d)
    }

    pub fn contract_report(&self) -> ContractReport {
        let r = self.contract_residual();
        let src = &self.declared_source - &self.declared_target;
        let per_grade: Vec<GradeResidual> = (0..=self.order())
            .map(|k| GradeResidual { grade: k, max_abs_residual: r.max_abs_in_grade(k), max_term: src.max_abs_in_grade(k) })
            .collect();
        let max = r.max_abs();
        ContractReport { name: self.name.clone(), order: self.order(), per_grade, max_abs_residual: max, pass: r.is_zero() }
    }

    /// Relabels everything by `σ`.
    pub fn permute(&self, p: Perm) -> Self {
        ModificationSeries {
            name: format!("{}∘{p}", self.name),
            value: self.value.permute(p),
            declared_source: self.declared_source.permute(p),
            declared_target: self.declared_target.permute(p),
        }
    }

    /// Negation: `Ξ⁻¹: ξ' ⇛ ξ` under lateral addition.
    pub fn reversed(&self) -> Self {
        ModificationSeries {
            name: format!("−{}", self.name),
            value: -&self.value,
            declared_source: self.declared_target.clone(),
            declared_target: self.declared_source.clone(),
        }
    }

    /// Whiskering `a·Ξ·b`.
    pub fn whisker(&self, a: &S, b: &S) -> Self {
        ModificationSeries {
            name: self.name.clone(),
            value: &(a * &self.value) * b,
            declared_source: &(a * &self.declared_source) * b,
            declared_target: &(a * &self.declared_target) * b,
        }
    }

    fn reduced(mut self) -> Self {
        self.value = reduce_mod(&self.value);
        self.declared_source = reduce_alg(&self.declared_source);
        self.declared_target = reduce_alg(&self.declared_target);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Congruence {
    L,
    R,
}

/// `(e^{iπt})_{e^{α t12}}` with `α^n/n!` supplied by `b`.
fn left_homotopy(order: usize, b: impl Fn(usize) -> SymCoeff) -> M {
    let inner = commutator_lift(&t(T12, order), &BimoduleSeries::l(order), b);
    commutator_lift(&t12_3(order), &inner, ipi_exp_coeff)
}

/// The congruences `𝓛̲ = (e^{iπt})_{e^{iπt12}}` and `𝓡̲ = (e^{iπt})_{e^{iπt23}}`.
pub fn congruence_series(letter: Congruence, order: usize) -> Result<ModificationSeries> {
    if order < 2 {
        return Err(Error::Domain("congruence series need order ≥ 2".into()));
    }
    let (x, y, mid, name) = match letter {
        Congruence::L => (t(T12, order), t12_3(order), BimoduleSeries::l(order), "L_cong"),
        Congruence::R => (t(T23, order), t1_23(order), BimoduleSeries::r(order), "R_cong"),
    };
    let value = commutator_lift(&y, &commutator_lift(&x, &mid, ipi_exp_coeff), ipi_exp_coeff);
    let (ex, ey) = (exp_ipi(&x), exp_ipi(&y));
    Ok(ModificationSeries { name: name.into(), value, declared_source: &ex * &ey, declared_target: &ey * &ex })
}

/// `t_ε^{t12}`: the series `Σ (−ln ε)^n (iπ)^m/(n! m!) Σ t_(12)3^j t12^k 𝓛 t12^{n−1−k} t_(12)3^{m−1−j}`
/// right-multiplied by `ε^{t12}`.
pub fn t_eps_series(order: usize) -> Result<M> {
    if order < 2 {
        return Err(Error::Domain("t_ε needs order ≥ 2".into()));
    }
    let core = left_homotopy(order, |n| lneps_exp_coeff(n, -1));
    Ok(&core * &eps_pow(&t(T12, order)))
}

/// `t_ε^{t12}·ε^{−t12}` as a modification `ε^{−t12}e^{iπt_(12)3} ⇛ e^{iπt_(12)3}ε^{−t12}`.
pub fn t_eps_modification(order: usize) -> Result<ModificationSeries> {
    let x = t(T12, order);
    let value = &t_eps_series(order)? * &eps_pow(&-&x);
    let (a, b) = (eps_pow(&-&x), exp_ipi(&t12_3(order)));
    Ok(ModificationSeries { name: "t_eps".into(), value, declared_source: &a * &b, declared_target: &b * &a })
}

/// `Σ_{n≥2} c_n Σ C(n−j,k) t13^{j−1} Λ^{l−1}(𝓛+𝓡)Λ^{n−j−k−l} t̄13^k`.
fn bch_like(order: usize, c: impl Fn(usize) -> SymCoeff) -> M {
    let (x, lam, xb) = (t(T13, order), lambda(order), t13_bar(order));
    let lr = &BimoduleSeries::l(order) + &BimoduleSeries::r(order);
    let xp: Vec<S> = (0..order).map(|k| x.pow(k)).collect();
    let lp: Vec<S> = (0..order).map(|k| lam.pow(k)).collect();
    let bp: Vec<S> = (0..order).map(|k| xb.pow(k)).collect();
    let mut out = M::zero(order);
    for n in 2..=order {
        let mut inner = M::zero(order);
        for j in 1..n {
            for k in 0..n - j {
                for l in 1..=n - j - k {
                    let term = &(&(&xp[j - 1] * &lp[l - 1]) * &lr) * &(&lp[n - j - k - l] * &bp[k]);
                    inner = &inner + &term.scale_rational(&binomial(n - j, k));
                }
            }
        }
        out = &out + &inner.scale(&c(n));
    }
    out
}

/// `ε^Λ ε^{t̄13} ⇛ ε^{t13}`.
pub fn bch_modification(order: usize) -> ModificationSeries {
    let value = bch_like(order, |n| lneps_exp_coeff(n, 1));
    ModificationSeries {
        name: "bch".into(),
        value,
        declared_source: &eps_pow(&lambda(order)) * &eps_pow(&t13_bar(order)),
        declared_target: eps_pow(&t(T13, order)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhiShift {
    V213,
    V231,
}

/// `Φ(x, t13) ⇛ Φ(x, t̄13)` with `x = t12` (213) or `x = t23` (231).
///
/// Built from the `ad`-form of the associator by telescoping
/// `ad_{t13}^q − ad_{t̄13}^q = Σ ad_{t13}^{q−m−1} ad_Λ ad_{t̄13}^m` and lifting
/// `ad_Λ = ∂D` through the bimodule.
pub fn phi_shift_modification(variant: PhiShift, order: usize) -> Result<ModificationSeries> {
    let x = match variant {
        PhiShift::V213 => t(T12, order),
        PhiShift::V231 => t(T23, order),
    };
    let (y, yb) = (t(T13, order), t13_bar(order));
    let xp: Vec<S> = (0..=order).map(|k| x.pow(k)).collect();
    let ad = |a: &S, z: &S| a.commutator(z);
    let ad_mod = |a: &S, m: &M| &(a * m) - &(m * a);
    let mut value = M::zero(order);
    for prof in profiles(order) {
        let psum: usize = prof.p.iter().sum();
        let n = prof.q.len();
        for j in tuples_below(&prof.p) {
            let jsum: usize = j.iter().sum();
            let mut prefix = vec![S::one(order)];
            for l in 0..n {
                let mut z = &prefix[l] * &xp[j[l]];
                for _ in 0..prof.q[l] {
                    z = ad(&yb, &z);
                }
                prefix.push(z);
            }
            let mut acc = M::zero(order);
            for l in 0..n {
                let base = &prefix[l] * &xp[j[l]];
                let mut z = base;
                for m in 0..prof.q[l] {
                    let mut mm = z.lambda_lift();
                    for _ in 0..prof.q[l] - m - 1 {
                        mm = ad_mod(&y, &mm);
                    }
                    for g in l + 1..n {
                        mm = &mm * &xp[j[g]];
                        for _ in 0..prof.q[g] {
                            mm = ad_mod(&y, &mm);
                        }
                    }
                    acc = &acc + &mm;
                    z = ad(&yb, &z);
                }
            }
            let term = &acc * &xp[psum - jsum];
            value = &value + &term.scale(&zeta_pqj(&prof, &j));
        }
    }
    let phi = phi_symbolic(order);
    let name = match variant {
        PhiShift::V213 => "phi_shift_213",
        PhiShift::V231 => "phi_shift_231",
    };
    Ok(ModificationSeries {
        name: name.into(),
        value,
        declared_source: substitute_pair(&phi, &x, &y)?,
        declared_target: substitute_pair(&phi, &x, &yb)?,
    })
}

/// `Φ₂₁₃ e^{iπΛ} ⇛ e^{iπΛ} Φ₂₁₃`.
pub fn phi_lambda_comm_modification(order: usize) -> Result<ModificationSeries> {
    let phi = substitute_pair(&phi_symbolic(order), &t(T12, order), &t(T13, order))?;
    let lam = lambda(order);
    let value = -&commutator_lift(&lam, &phi.lambda_lift(), ipi_exp_coeff);
    let e = exp_ipi(&lam);
    Ok(ModificationSeries {
        name: "phi_lambda_comm".into(),
        value,
        declared_source: &phi * &e,
        declared_target: &e * &phi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExpShift {
    QVI,
    QIV,
    PIV,
}

/// The three closed-form exponential shifts:
/// `e^{iπt_(12)3} ⇛ e^{iπΛ}e^{−iπt12}`, `e^{iπt13} ⇛ e^{iπΛ}e^{iπt̄13}` and
/// `[e^{iπt̄13}, ε^Λ] ⇛ 0`.
pub fn exp_shift_modification(variant: ExpShift, order: usize) -> ModificationSeries {
    let lam = lambda(order);
    match variant {
        ExpShift::QVI => {
            let (tt, x) = (t12_3(order), t(T12, order));
            let l = BimoduleSeries::l(order);
            let tp: Vec<S> = (0..order).map(|k| tt.pow(k)).collect();
            let lp: Vec<S> = (0..order).map(|k| lam.pow(k)).collect();
            let xp: Vec<S> = (0..order).map(|k| x.pow(k)).collect();
            let mut value = M::zero(order);
            for m in 2..=order {
                let mut inner = M::zero(order);
                for li in 1..m {
                    for q in 0..m - li {
                        let sign = if q % 2 == 0 { 1 } else { -1 };
                        let c = binomial(m - li, q) * rat_int(sign);
                        for j in 0..m - li - q {
                            let term = &(&(&tp[li - 1] * &lp[j]) * &l) * &(&lp[m - li - q - 1 - j] * &xp[q]);
                            inner = &inner + &term.scale_rational(&c);
                        }
                    }
                }
                value = &value - &inner.scale(&ipi_exp_coeff(m));
            }
            ModificationSeries {
                name: "exp_shift_QVI".into(),
                value,
                declared_source: exp_ipi(&tt),
                declared_target: &exp_ipi(&lam) * &exp_ipi(&-&x),
            }
        }
        ExpShift::QIV => ModificationSeries {
            name: "exp_shift_QIV".into(),
            value: bch_like(order, |n| ipi_exp_coeff(n).neg()),
            declared_source: exp_ipi(&t(T13, order)),
            declared_target: &exp_ipi(&lam) * &exp_ipi(&t13_bar(order)),
        },
        ExpShift::PIV => {
            let xb = t13_bar(order);
            let lr = &BimoduleSeries::l(order) + &BimoduleSeries::r(order);
            let inner = commutator_lift(&lam, &lr, |k| lneps_exp_coeff(k, 1));
            let value = -&commutator_lift(&xb, &inner, ipi_exp_coeff);
            let (a, b) = (exp_ipi(&xb), eps_pow(&lam));
            ModificationSeries {
                name: "exp_shift_PIV".into(),
                value,
                declared_source: (&a * &b).try_sub(&(&b * &a)).expect("same order"),
                declared_target: S::zero(order),
            }
        }
    }
}

/// `Φ_σ = Φ(t_{σ1σ2}, t_{σ2σ3})` from the Le–Murakami series.
pub fn phi_sigma(p: Perm, order: usize) -> Result<S> {
    let phi = phi_symbolic(order);
    substitute_pair(&phi, &t(T12, order), &t(T23, order)).map(|s| s.permute(p))
}

/// The pre-hexagonator `Φ₂₁₃e^{iπt_(12)3}Φ₃₂₁ ⇛ e^{iπt13}Φ₂₃₁e^{iπt23}`, assembled
/// from the five edge modifications by whiskering and lateral addition.
///
/// The middle step uses the two-letter hexagon identity of the associator,
/// `Φ(t12,t̄13)e^{−iπt12}Φ₃₂₁ = e^{iπt̄13}Φ(t23,t̄13)e^{iπt23}`, which only holds
/// after MZV reduction; the returned series is in reduced form.
pub fn prehex_direct(order: usize) -> Result<ModificationSeries> {
    let parts = prehex_parts(order)?;
    let mut value = M::zero(order);
    for p in &parts {
        value = &value + &p.value;
    }
    let src = &(&phi_sigma(Perm::P213, order)? * &exp_ipi(&t12_3(order))) * &phi_sigma(Perm::P321, order)?;
    let tgt = &(&exp_ipi(&t(T13, order)) * &phi_sigma(Perm::P231, order)?) * &exp_ipi(&t(T23, order));
    Ok(ModificationSeries { name: "prehex_direct".into(), value, declared_source: src, declared_target: tgt }.reduced())
}

/// The five whiskered edges of the direct construction, in diagram order.
pub fn prehex_parts(order: usize) -> Result<Vec<ModificationSeries>> {
    let builders: Vec<Box<dyn Fn() -> Result<ModificationSeries> + Send + Sync>> = vec![
        Box::new(move || Ok(exp_shift_modification(ExpShift::QVI, order))),
        Box::new(move || phi_lambda_comm_modification(order)),
        Box::new(move || phi_shift_modification(PhiShift::V213, order)),
        Box::new(move || phi_shift_modification(PhiShift::V231, order)),
        Box::new(move || Ok(exp_shift_modification(ExpShift::QIV, order))),
    ];
    let raw: Vec<ModificationSeries> = builders.par_iter().map(|b| b()).collect::<Result<_>>()?;
    let phi213 = phi_sigma(Perm::P213, order)?;
    let phi321 = phi_sigma(Perm::P321, order)?;
    let phi231 = phi_sigma(Perm::P231, order)?;
    let e_lam = exp_ipi(&lambda(order));
    let e_m12 = exp_ipi(&-&t(T12, order));
    let e_23 = exp_ipi(&t(T23, order));
    let e_b13 = exp_ipi(&t13_bar(order));
    let one = S::one(order);
    let tail = &e_m12 * &phi321;
    Ok(vec![
        raw[0].whisker(&phi213, &phi321),
        raw[1].whisker(&one, &tail),
        raw[2].whisker(&e_lam, &tail),
        raw[3].reversed().whisker(&(&e_lam * &e_b13), &e_23),
        raw[4].reversed().whisker(&one, &(&phi231 * &e_23)),
    ])
}

/// Every symbolic builder, for the contract suite.
pub fn all_modifications(order: usize) -> Result<Vec<ModificationSeries>> {
    let builders: Vec<Box<dyn Fn() -> Result<ModificationSeries> + Send + Sync>> = vec![
        Box::new(move || congruence_series(Congruence::L, order)),
        Box::new(move || congruence_series(Congruence::R, order)),
        Box::new(move || t_eps_modification(order)),
        Box::new(move || Ok(bch_modification(order))),
        Box::new(move || phi_shift_modification(PhiShift::V213, order)),
        Box::new(move || phi_shift_modification(PhiShift::V231, order)),
        Box::new(move || phi_lambda_comm_modification(order)),
        Box::new(move || Ok(exp_shift_modification(ExpShift::QVI, order))),
        Box::new(move || Ok(exp_shift_modification(ExpShift::QIV, order))),
        Box::new(move || Ok(exp_shift_modification(ExpShift::PIV, order))),
        Box::new(move || prehex_direct(order)),
    ];
    builders.par_iter().map(|b| b()).collect()
}

/// Exact-difference report for an identity between bimodule series.
///
/// `per_grade` is measured modulo the interchange span (see
/// [`InterchangeBasis`]); `free_per_grade` is the raw difference in the free
/// relator bimodule.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub order: usize,
    pub per_grade: Vec<GradeResidual>,
    pub free_per_grade: Vec<f64>,
    pub max_abs_residual: f64,
    pub exact_zero: bool,
}

fn identity_report(name: &str, diff: &M, scale: &[&M]) -> IdentityReport {
    let order = diff.order();
    let quotient = InterchangeBasis::new(order).reduce(diff);
    let per_grade = (0..=order)
        .map(|k| GradeResidual {
            grade: k,
            max_abs_residual: quotient.max_abs_in_grade(k),
            max_term: scale.iter().map(|m| m.max_abs_in_grade(k)).fold(0.0, f64::max),
        })
        .collect();
    IdentityReport {
        name: name.into(),
        order,
        per_grade,
        free_per_grade: (0..=order).map(|k| diff.max_abs_in_grade(k)).collect(),
        max_abs_residual: quotient.max_abs(),
        exact_zero: quotient.is_zero(),
    }
}

/// `ε^{ad t12}(𝓛̲ + [e^{iπt12}, t_ε^{t12}]) − 𝓛̲`, which must vanish identically.
pub fn lemma_ad_relation_check(order: usize) -> Result<IdentityReport> {
    let x = t(T12, order);
    let cong = congruence_series(Congruence::L, order)?.value;
    let te = t_eps_series(order)?;
    let e = exp_ipi(&x);
    let bracket = &(&e * &te) - &(&te * &e);
    let lhs = &(&eps_pow(&x) * &(&cong + &bracket)) * &eps_pow(&-&x);
    let diff = reduce_mod(&(&lhs - &cong));
    Ok(identity_report("lemma_ad_relation", &diff, &[&lhs, &cong]))
}

/// Breen equation in the free model, using the direct pre-hexagonator.
#[derive(Clone, Debug, Serialize)]
pub struct BreenSymbolicReport {
    pub difference: IdentityReport,
    /// `∂(LHS) − ∂(RHS)` per grade: zero when both sides have matching boundaries.
    pub boundary_per_grade: Vec<f64>,
}

/// `𝓛̲ + Φ₃₂₁𝐑₂₁₃Φ₂₁₃e^{iπt12} − Φ₃₂₁e^{iπt23}Φ₁₃₂𝐑₃₂₁ + Φ₃₂₁𝓡̲Φ + 𝐑₂₃₁Φ₂₃₁e^{iπt23}Φ − e^{iπt12}Φ₃₁₂𝐑Φ`.
pub fn breen_symbolic_check(order: usize) -> Result<BreenSymbolicReport> {
    if order < 2 {
        return Err(Error::Domain("Breen check needs order ≥ 2".into()));
    }
    let r = prehex_direct(order)?.value;
    let lc = congruence_series(Congruence::L, order)?.value;
    let rc = congruence_series(Congruence::R, order)?.value;
    let ph = |p: Perm| phi_sigma(p, order);
    let (phi, p321, p213, p132, p231, p312) =
        (ph(Perm::ID)?, ph(Perm::P321)?, ph(Perm::P213)?, ph(Perm::P132)?, ph(Perm::P231)?, ph(Perm::P312)?);
    let e12 = exp_ipi(&t(T12, order));
    let e23 = exp_ipi(&t(T23, order));
    let terms: Vec<M> = vec![
        lc,
        &(&(&p321 * &r.permute(Perm::P213)) * &p213) * &e12,
        -&(&(&(&p321 * &e23) * &p132) * &r.permute(Perm::P321)),
        &(&p321 * &rc) * &phi,
        &(&(&r.permute(Perm::P231) * &p231) * &e23) * &phi,
    ];
    let rhs = &(&(&e12 * &p312) * &r) * &phi;
    let mut lhs = M::zero(order);
    for tm in &terms {
        lhs = &lhs + tm;
    }
    let diff = reduce_mod(&(&lhs - &rhs));
    let bd = reduce_alg(&(&lhs.coboundary() - &rhs.coboundary()));
    let mut scale: Vec<&M> = terms.iter().collect();
    scale.push(&rhs);
    Ok(BreenSymbolicReport {
        difference: identity_report("breen_symbolic", &diff, &scale),
        boundary_per_grade: (0..=order).map(|k| bd.max_abs_in_grade(k)).collect(),
    })
}

// ---------------------------------------------------------------------------
// Numeric route

type NA = AlgebraSeries<C64>;
type NM = BimoduleSeries<C64>;

/// Tolerance for MZVs inside numerically evaluated symbolic series.
const MZV_TOL: f64 = 1e-13;

fn eval_at(s: &S, eps: f64) -> Result<NA> {
    s.try_map_coeffs(|c| c.eval(eps, MZV_TOL))
}

fn eval_mod_at(m: &M, eps: f64) -> Result<NM> {
    m.try_map_coeffs(|c| c.eval(eps, MZV_TOL))
}

/// A 2-holonomy together with its globularity deviation.
#[derive(Clone, Debug)]
pub struct HolonomyEntry {
    pub value: NM,
    pub globularity: f64,
}

/// Base-connection transports and 2-holonomies at one `ε`.
#[derive(Clone, Debug)]
pub struct HolonomyTable {
    pub eps: f64,
    pub order: usize,
    pub transports: BTreeMap<String, NA>,
    pub holonomies: BTreeMap<String, HolonomyEntry>,
}

/// 1-paths used to whisker the pre-hexagonator and the Breen loop.
pub const WHISKER_KEYS: [&str; 12] =
    ["c_I", "c_II", "c_III", "c_VI", "p_I", "p_II", "p_III", "p_IV", "p_V", "p_VI", "q_V", "q_down_1"];

/// 2-paths entering `W^𝒬` and `W^𝒫`.
pub const PREHEX_2PATHS: [&str; 6] = ["Q_VI", "Q_V", "P_V", "P_IV", "P_III", "Q_IV"];

impl HolonomyTable {
    /// Computes every requested entry with the base connection; 2-holonomies run in parallel.
    pub fn compute(prm: &Params, order: usize, q: &QuadratureSpec, paths: &[&str], two_paths: &[&str]) -> Result<Self> {
        let c = Connection::base();
        let transports = paths
            .par_iter()
            .map(|k| Ok((k.to_string(), parallel_transport(&make_path(k, prm)?, &c, order, q)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let holonomies = two_paths
            .par_iter()
            .map(|k| {
                let p = make_2path(k, prm)?;
                let value = surface_holonomy(&p, &c, order, q)?;
                let src = parallel_transport(&p.source(), &c, order, q)?;
                let tgt = parallel_transport(&p.target(), &c, order, q)?;
                let globularity = (&value.coboundary() - &(&src - &tgt)).max_abs();
                Ok((k.to_string(), HolonomyEntry { value, globularity }))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(HolonomyTable { eps: prm.eps, order, transports, holonomies })
    }

    /// The table needed by [`prehex_holonomy`] and [`breen_2loop_check`].
    pub fn for_breen(eps: f64, order: usize, q: &QuadratureSpec) -> Result<Self> {
        let mut two: Vec<&str> = PREHEX_2PATHS.to_vec();
        two.push("P_L");
        HolonomyTable::compute(&Params::with_eps(eps)?, order, q, &WHISKER_KEYS, &two)
    }

    pub fn w(&self, key: &str) -> Result<&NA> {
        self.transports.get(key).ok_or_else(|| Error::Domain(format!("transport {key} not in table")))
    }

    pub fn h(&self, key: &str) -> Result<&NM> {
        self.holonomies.get(key).map(|e| &e.value).ok_or_else(|| Error::Domain(format!("2-holonomy {key} not in table")))
    }

    /// `W^𝒫 = W^{𝒫_V}W^{p_VI}W^{p_I} − W^{𝒫_IV}W^{c_III}W^{p_II} − W^{p_IV}W^{𝒫_III}W^{p_II}`.
    pub fn w_p(&self) -> Result<NM> {
        let a = &(self.h("P_V")? * self.w("p_VI")?) * self.w("p_I")?;
        let b = &(self.h("P_IV")? * self.w("c_III")?) * self.w("p_II")?;
        let c = &(self.w("p_IV")? * self.h("P_III")?) * self.w("p_II")?;
        Ok(&(&a - &b) - &c)
    }

    /// `W^𝒬 = W^{q_V}W^{𝒬_VI}W^{p_I} + W^{𝒬_V}W^{p_VI}W^{p_I} + W^{q↓¹}W^𝒫 − W^{𝒬_IV}W^{p_III}W^{p_II}`.
    pub fn w_q(&self) -> Result<NM> {
        let a = &(self.w("q_V")? * self.h("Q_VI")?) * self.w("p_I")?;
        let b = &(self.h("Q_V")? * self.w("p_VI")?) * self.w("p_I")?;
        let c = self.w("q_down_1")? * &self.w_p()?;
        let d = &(self.h("Q_IV")? * self.w("p_III")?) * self.w("p_II")?;
        Ok(&(&(&a + &b) + &c) - &d)
    }

    /// Largest globularity deviation among the stored 2-holonomies.
    pub fn max_globularity(&self) -> f64 {
        self.holonomies.values().map(|e| e.globularity).fold(0.0, f64::max)
    }
}

/// Predicted grade-2 coefficients `(𝓛, 𝓡)` of the six vertically-interpolative
/// 2-holonomies and of the left congruence path, including `ln ε` terms.
pub fn grade_two_prediction(key: &str, eps: f64) -> Result<(C64, C64)> {
    let pi = std::f64::consts::PI;
    let l = eps.ln();
    let ipl = C64::new(0.0, pi * l);
    let c = |x: f64| C64::new(x, 0.0);
    Ok(match key {
        "P_V" => (c(-pi * pi / 6.0 - l * l / 2.0), c(-l * l / 2.0)),
        "P_III" => (c(-l * l / 2.0), c(-pi * pi / 6.0 - l * l / 2.0)),
        "P_IV" => (ipl, ipl),
        "Q_VI" => (c(pi * pi / 2.0), c(0.0)),
        "Q_V" => (-ipl * 2.0, -ipl),
        "Q_IV" => (c(pi * pi / 2.0), c(pi * pi / 2.0)),
        "P_L" => (c(-pi * pi), c(0.0)),
        _ => return Err(Error::Domain(format!("no grade-2 prediction for {key}"))),
    })
}

/// Relative grade-2 error `max |computed − predicted| / max |predicted|` over `(𝓛, 𝓡)`.
pub fn grade_two_error(computed: &NM, predicted: (C64, C64)) -> f64 {
    let (l, r) = computed.bare_coeffs();
    let err = (l - predicted.0).norm().max((r - predicted.1).norm());
    err / predicted.0.norm().max(predicted.1.norm())
}

/// The numeric pre-hexagonator
/// `𝐑^ε = ε^{−t13} W^𝒬 ε^{t23} − Φ₂₁₃ t_ε^{t12} Φ₃₂₁`, with limit associators.
#[derive(Clone, Debug)]
pub struct PrehexHolonomy {
    pub eps: f64,
    pub value: NM,
    pub w_q: NM,
    pub max_globularity: f64,
}

pub fn prehex_holonomy_from(table: &HolonomyTable) -> Result<PrehexHolonomy> {
    let order = table.order;
    let eps = table.eps;
    let w_q = table.w_q()?;
    let sym_order = order.max(2);
    let phi213 = eval_at(&phi_sigma(Perm::P213, sym_order)?, eps)?.with_order(order);
    let phi321 = eval_at(&phi_sigma(Perm::P321, sym_order)?, eps)?.with_order(order);
    let te = eval_mod_at(&t_eps_series(sym_order)?, eps)?.with_order(order);
    let left = eval_at(&eps_pow(&-&t(T13, sym_order)), eps)?.with_order(order);
    let right = eval_at(&eps_pow(&t(T23, sym_order)), eps)?.with_order(order);
    let value = &(&(&left * &w_q) * &right) - &(&(&phi213 * &te) * &phi321);
    Ok(PrehexHolonomy { eps, value, w_q, max_globularity: table.max_globularity() })
}

pub fn prehex_holonomy(order: usize, eps: f64, q: &QuadratureSpec) -> Result<PrehexHolonomy> {
    let table = HolonomyTable::compute(&Params::with_eps(eps)?, order, q, &WHISKER_KEYS, &PREHEX_2PATHS)?;
    prehex_holonomy_from(&table)
}

/// The pre-hexagonator's grade-2 limit `−π²/6 (𝓛 + 2𝓡)`.
pub fn prehex_grade_two_limit() -> (C64, C64) {
    let a = -std::f64::consts::PI.powi(2) / 6.0;
    (C64::new(a, 0.0), C64::new(2.0 * a, 0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct Breen2LoopReport {
    pub eps: f64,
    pub order: usize,
    /// `max |LHS − RHS|` per grade, with `max_term` the largest coefficient among the six terms.
    pub per_grade: Vec<GradeResidual>,
    pub congruence_grade_two_error: f64,
    /// `|W^{τ𝒬_VI}(∇) − σ·W^{𝒬_VI}(∇)|` over the checked `τ`, when requested.
    pub equivariance: Option<f64>,
    pub max_globularity: f64,
}

impl Breen2LoopReport {
    /// Residual relative to the largest term, in grade `k`.
    pub fn relative(&self, k: usize) -> f64 {
        let g = &self.per_grade[k];
        g.max_abs_residual / g.max_term.max(f64::MIN_POSITIVE)
    }
}

/// The Breen equation as a relation between numeric 2-holonomies:
/// `W^{𝒫_𝓛} + W^{p_I 𝒬₂₁₃ p_V c_VI} − W^{p_I c_II [p_III∘ι] 𝒬₃₂₁} + W^{p_I}W^{𝒫_𝓡}W^{c_I}
///  + W^{𝒬₃₁₂ p_III c_II c_I} = W^{c_VI [p_V∘ι] 𝒬 c_I}`.
///
/// `𝒬_σ` is the image of `𝒬` under the coordinate map `τ`; its 2-holonomy with the
/// base connection equals that of `𝒬` with the pulled-back connection, which in
/// turn is the relabelling of `W^𝒬` by `τ`'s permutation. `𝒫_𝓡 = τ₁₃(𝒫_𝓛)`.
pub fn breen_2loop_from(table: &HolonomyTable, q: &QuadratureSpec, check_equivariance: bool) -> Result<Breen2LoopReport> {
    use crate::geometry::{tau_transform_path2, Tau};
    let order = table.order;
    let w_q = table.w_q()?;
    let qs = |tau: Tau| w_q.permute(tau.perm());
    let p_l = table.h("P_L")?.clone();
    let p_r = p_l.permute(Tau::T13.perm());
    let w = |k: &str| table.w(k);
    let prm = Params::with_eps(table.eps)?;
    let inv = |k: &str| -> Result<NA> { parallel_transport(&make_path(k, &prm)?.reverse(), &Connection::base(), order, q) };
    let p_v_rev = inv("p_V")?;
    let p_iii_rev = inv("p_III")?;
    let terms: Vec<NM> = vec![
        p_l.clone(),
        &(&(w("p_I")? * &qs(Tau::T12)) * w("p_V")?) * w("c_VI")?,
        -&(&(&(w("p_I")? * w("c_II")?) * &p_iii_rev) * &qs(Tau::T13)),
        &(w("p_I")? * &p_r) * w("c_I")?,
        &(&(&qs(Tau::T12_3) * w("p_III")?) * w("c_II")?) * w("c_I")?,
    ];
    let rhs = &(&(w("c_VI")? * &p_v_rev) * &w_q) * w("c_I")?;
    let mut lhs = NM::zero(order);
    for tm in &terms {
        lhs = &lhs + tm;
    }
    let diff = &lhs - &rhs;
    let per_grade = (0..=order)
        .map(|k| GradeResidual {
            grade: k,
            max_abs_residual: diff.max_abs_in_grade(k),
            max_term: terms.iter().chain(std::iter::once(&rhs)).map(|m| m.max_abs_in_grade(k)).fold(0.0, f64::max),
        })
        .collect();
    let equivariance = if check_equivariance {
        let base = table.h("Q_VI")?;
        let p = make_2path("Q_VI", &prm)?;
        let devs = [Tau::T12, Tau::T13, Tau::T12_3]
            .par_iter()
            .map(|&tau| {
                let moved = surface_holonomy(&tau_transform_path2(tau, &p), &Connection::base(), order, q)?;
                let pulled = surface_holonomy(&p, &Connection::base().pullback(tau), order, q)?;
                let a = (&moved - &base.permute(tau.perm())).max_abs();
                let b = (&pulled - &base.permute(tau.perm())).max_abs();
                Ok(a.max(b))
            })
            .collect::<Result<Vec<f64>>>()?;
        Some(devs.into_iter().fold(0.0, f64::max))
    } else {
        None
    };
    Ok(Breen2LoopReport {
        eps: table.eps,
        order,
        per_grade,
        congruence_grade_two_error: grade_two_error(&p_l, grade_two_prediction("P_L", table.eps)?),
        equivariance,
        max_globularity: table.max_globularity(),
    })
}

pub fn breen_2loop_check(order: usize, eps: f64, q: &QuadratureSpec) -> Result<Breen2LoopReport> {
    let table = HolonomyTable::for_breen(eps, order, q)?;
    breen_2loop_from(&table, q, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dk2::{ModLetter, ModWord};

    fn bare(m: &M) -> (SymCoeff, SymCoeff) {
        let g = reduce_mod(&m.extract_grade(2));
        (g.coeff(&ModWord::bare(ModLetter::L)), g.coeff(&ModWord::bare(ModLetter::R)))
    }

    #[test]
    fn contracts_order_four() {
        for m in all_modifications(4).unwrap() {
            let r = m.contract_report();
            assert!(r.pass, "{} residual {:?}", m.name, r.per_grade);
        }
    }

    #[test]
    fn contracts_order_five() {
        for m in all_modifications(5).unwrap() {
            let r = m.contract_report();
            assert!(r.pass, "{} residual {:?}", m.name, r.per_grade);
        }
        assert!(lemma_ad_relation_check(5).unwrap().exact_zero);
    }

    #[test]
    fn breen_higher_grades() {
        let b = breen_symbolic_check(5).unwrap();
        assert!(b.difference.exact_zero, "{:?}", b.difference.per_grade);
        assert!(b.boundary_per_grade.iter().all(|x| *x == 0.0));
        // the free bimodule only sees the interchange-law elements from grade 4 on
        assert!(b.difference.free_per_grade[..4].iter().all(|x| *x == 0.0));
        assert!(b.difference.free_per_grade[4] > 0.0);
    }

    #[test]
    fn grade_two_oracles() {
        let pi2 = sym(2, 0, rat_int(1));
        let (l, r) = bare(&congruence_series(Congruence::L, 3).unwrap().value);
        assert_eq!((l, r), (pi2.clone(), SymCoeff::zero()));
        let (l, _) = bare(&t_eps_series(3).unwrap());
        assert_eq!(l, sym(1, 1, rat_int(-1)));
        let (l, r) = bare(&bch_modification(3).value);
        assert_eq!((l.clone(), r), (sym(0, 2, Rational::new(1.into(), 2.into())), l));
        let (l, r) = bare(&exp_shift_modification(ExpShift::QVI, 3).value);
        assert_eq!((l, r), (sym(2, 0, Rational::new((-1).into(), 2.into())), SymCoeff::zero()));
        let (l, r) = bare(&exp_shift_modification(ExpShift::QIV, 3).value);
        assert_eq!(l, sym(2, 0, Rational::new((-1).into(), 2.into())));
        assert_eq!(r, l);
        let (l, r) = bare(&exp_shift_modification(ExpShift::PIV, 3).value);
        assert_eq!((l.clone(), r), (sym(1, 1, rat_int(-1)), l));
        let plc = phi_lambda_comm_modification(3).unwrap().value;
        assert!(plc.extract_grade(2).is_zero() && !plc.extract_grade(3).is_zero());
        let (l, r) = bare(&prehex_direct(3).unwrap().value);
        assert_eq!(l, sym(2, 0, Rational::new(1.into(), 6.into())));
        assert_eq!(r, sym(2, 0, Rational::new(1.into(), 3.into())));
    }

    #[test]
    fn permuted_variants() {
        let l = congruence_series(Congruence::L, 4).unwrap();
        let r = congruence_series(Congruence::R, 4).unwrap();
        assert_eq!(l.value.permute(Perm::P321), r.value);
        let a = phi_shift_modification(PhiShift::V213, 4).unwrap();
        let b = phi_shift_modification(PhiShift::V231, 4).unwrap();
        assert_eq!(a.value.permute(Perm::P321), b.value);
        assert_eq!(a.declared_target.permute(Perm::P321), b.declared_target);
    }

    #[test]
    fn lemma_and_breen_low_order() {
        assert!(lemma_ad_relation_check(4).unwrap().exact_zero);
        let b = breen_symbolic_check(2).unwrap();
        assert!(b.difference.exact_zero, "{:?}", b.difference.per_grade);
    }

    #[test]
    fn numeric_route_at_one_percent() {
        let q = QuadratureSpec::new(1e-8, 1e-10).unwrap();
        let tab = HolonomyTable::for_breen(1e-2, 2, &q).unwrap();
        assert!(tab.max_globularity() < 1e-6);
        let ph = prehex_holonomy_from(&tab).unwrap();
        assert!(grade_two_error(&ph.value, prehex_grade_two_limit()) < 0.05);
        let b = breen_2loop_from(&tab, &q, true).unwrap();
        assert!(b.relative(2) < 0.05, "{b:?}");
        assert!(b.equivariance.unwrap() < 1e-6, "{b:?}");
        assert!(b.congruence_grade_two_error < 0.01);
    }
}
