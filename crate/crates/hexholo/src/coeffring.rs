//! Coefficient rings shared by every series type.
//!
//! Two domains are provided. [`SymCoeff`] holds exact values: rational
//! combinations of monomials `(iπ)^a (ln ε)^b ζ(..)ζ(..)…`. Numeric values are
//! plain [`Complex64`]. Evaluation maps the former onto the latter.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mzv;

pub type Rational = BigRational;
pub type NumCoeff = Complex64;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn binomial(n: usize, k: usize) -> Rational {
    if k > n {
        return Rational::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(acc)
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn inv_factorial(n: usize) -> Rational {
    Rational::new(BigInt::one(), factorial(n))
}

/// Ring operations every series coefficient supports.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const DOMAIN: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(q: &Rational) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Largest absolute value among the stored parts; used by residual reports.
    fn magnitude(&self) -> f64;
    fn to_json(&self) -> Value;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&rat_int(n))
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn scale(&self, q: &Rational) -> Self {
        self.mul(&Self::from_rational(q))
    }
    fn add_assign(&mut self, other: &Self) {
        *self = self.add(other);
    }
}

impl Coeff for Complex64 {
    const DOMAIN: &'static str = "numeric";

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_rational(q: &Rational) -> Self {
        Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_json(&self) -> Value {
        json!({"re": self.re, "im": self.im})
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

/// A product of multiple zeta values, stored as a sorted multiset of index tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MzvMonomial(Vec<Vec<u32>>);

pub fn is_admissible(idx: &[u32]) -> bool {
    !idx.is_empty() && idx[0] >= 2 && idx.iter().all(|&s| s >= 1)
}

impl MzvMonomial {
    pub fn one() -> Self {
        MzvMonomial(Vec::new())
    }

    pub fn single(idx: &[u32]) -> Result<Self> {
        if !is_admissible(idx) {
            return Err(Error::Inadmissible(idx.to_vec()));
        }
        Ok(MzvMonomial(vec![idx.to_vec()]))
    }

    pub fn from_factors(mut factors: Vec<Vec<u32>>) -> Result<Self> {
        if let Some(bad) = factors.iter().find(|f| !is_admissible(f)) {
            return Err(Error::Inadmissible(bad.clone()));
        }
        factors.sort();
        Ok(MzvMonomial(factors))
    }

    pub fn factors(&self) -> &[Vec<u32>] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().map(|f| f.iter().sum::<u32>()).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut f = self.0.clone();
        f.extend(other.0.iter().cloned());
        f.sort();
        MzvMonomial(f)
    }
}

impl fmt::Display for MzvMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|idx| {
                let s: Vec<String> = idx.iter().map(|k| k.to_string()).collect();
                format!("ζ({})", s.join(","))
            })
            .collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Monomial key of a symbolic coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymKey {
    pub ipi: u32,
    pub lneps: u32,
    pub zetas: MzvMonomial,
}

impl SymKey {
    fn mul(&self, other: &Self) -> Self {
        SymKey {
            ipi: self.ipi + other.ipi,
            lneps: self.lneps + other.lneps,
            zetas: self.zetas.mul(&other.zetas),
        }
    }
}

/// Exact coefficient: a finite map from monomials to nonzero rationals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymCoeff {
    terms: BTreeMap<SymKey, Rational>,
}

impl SymCoeff {
    pub fn rational(q: Rational) -> Self {
        let mut c = SymCoeff::default();
        c.push(SymKey::default(), q);
        c
    }

    pub fn monomial(ipi: u32, lneps: u32, zetas: MzvMonomial, q: Rational) -> Self {
        let mut c = SymCoeff::default();
        c.push(SymKey { ipi, lneps, zetas }, q);
        c
    }

    /// The symbol `iπ`.
    pub fn ipi() -> Self {
        Self::monomial(1, 0, MzvMonomial::one(), Rational::one())
    }

    /// The symbol `ln ε`.
    pub fn lneps() -> Self {
        Self::monomial(0, 1, MzvMonomial::one(), Rational::one())
    }

    pub fn zeta(idx: &[u32]) -> Result<Self> {
        Ok(Self::monomial(0, 0, MzvMonomial::single(idx)?, Rational::one()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymKey, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, key: SymKey, q: Rational) {
        if q.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += q;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, q);
            }
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(SymCoeff::one(), |acc, _| acc.mul(self))
    }

    /// Highest MZV weight plus symbol degrees among the terms.
    pub fn max_weight(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| k.ipi + k.lneps + k.zetas.weight())
            .max()
            .unwrap_or(0)
    }

    /// Numeric value at a given ε; zeta values are computed to `mzv_tol`.
    pub fn eval(&self, eps: f64, mzv_tol: f64) -> Result<NumCoeff> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
        }
        if mzv_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Domain("mzv tolerance must be positive".into()));
        }
        let ipi = Complex64::new(0.0, std::f64::consts::PI);
        let ln = eps.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, q) in &self.terms {
            let mut t = Complex64::new(q.to_f64().ok_or(Error::NonFinite)?, 0.0);
            t *= ipi.powu(k.ipi);
            t *= ln.powi(k.lneps as i32);
            for idx in k.zetas.factors() {
                t *= cached_zeta(idx, mzv_tol)?;
            }
            acc += t;
        }
        if !acc.re.is_finite() || !acc.im.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(acc)
    }

    /// Substitutes `ln ε ↦ 0`, i.e. evaluates the coefficient at ε = 1 symbolically.
    pub fn at_eps_one(&self) -> Self {
        let mut out = SymCoeff::default();
        for (k, q) in &self.terms {
            if k.lneps == 0 {
                out.push(k.clone(), q.clone());
            }
        }
        out
    }

    /// Canonical form modulo known MZV relations.
    ///
    /// Single even zetas become rational multiples of `(iπ)^{2k}`. Every
    /// admissible index of weight at most five is rewritten over
    /// `{(iπ)^2, ζ(3), ζ(5)}`. Heavier factors are left untouched.
    pub fn reduced(&self) -> Self {
        let mut out = SymCoeff::default();
        for (k, q) in &self.terms {
            let mut term = SymCoeff::monomial(k.ipi, k.lneps, MzvMonomial::one(), q.clone());
            for idx in k.zetas.factors() {
                term = term.mul(&reduce_index(idx));
            }
            for (k2, q2) in term.terms {
                out.push(k2, q2);
            }
        }
        out
    }

    pub fn to_string_compact(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, q) in &self.terms {
            let mut s = q.to_string();
            if k.ipi > 0 {
                s.push_str(&format!("·(iπ)^{}", k.ipi));
            }
            if k.lneps > 0 {
                s.push_str(&format!("·(lnε)^{}", k.lneps));
            }
            if !k.zetas.is_one() {
                s.push_str(&format!("·{}", k.zetas));
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for SymCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_compact())
    }
}

impl Coeff for SymCoeff {
    const DOMAIN: &'static str = "symbolic";

    fn zero() -> Self {
        SymCoeff::default()
    }
    fn one() -> Self {
        SymCoeff::rational(Rational::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_rational(q: &Rational) -> Self {
        SymCoeff::rational(q.clone())
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }
    fn add_assign(&mut self, other: &Self) {
        for (k, q) in &other.terms {
            self.push(k.clone(), q.clone());
        }
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = SymCoeff::default();
        for (k1, q1) in &self.terms {
            for (k2, q2) in &other.terms {
                out.push(k1.mul(k2), q1 * q2);
            }
        }
        out
    }
    fn neg(&self) -> Self {
        SymCoeff {
            terms: self.terms.iter().map(|(k, q)| (k.clone(), -q)).collect(),
        }
    }
    fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return SymCoeff::default();
        }
        SymCoeff {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * q)).collect(),
        }
    }
    fn magnitude(&self) -> f64 {
        self.terms
            .values()
            .map(|q| q.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
    fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(k, q)| {
                    json!({
                        "ipi": k.ipi,
                        "lneps": k.lneps,
                        "zetas": k.zetas.factors(),
                        "coeff": q.to_string(),
                    })
                })
                .collect(),
        )
    }
}

/// A coefficient from either domain, for callers that only know the domain at runtime.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Sym(SymCoeff),
    Num(NumCoeff),
}

impl Coefficient {
    fn domain(&self) -> &'static str {
        match self {
            Coefficient::Sym(_) => SymCoeff::DOMAIN,
            Coefficient::Num(_) => Complex64::DOMAIN,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Coefficient::Sym(a), Coefficient::Sym(b)) => Ok(Coefficient::Sym(a.add(b))),
            (Coefficient::Num(a), Coefficient::Num(b)) => Ok(Coefficient::Num(a + b)),
            _ => Err(Error::DomainMismatch(self.domain(), other.domain())),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Coefficient::Sym(a), Coefficient::Sym(b)) => Ok(Coefficient::Sym(a.mul(b))),
            (Coefficient::Num(a), Coefficient::Num(b)) => Ok(Coefficient::Num(a * b)),
            _ => Err(Error::DomainMismatch(self.domain(), other.domain())),
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        match self {
            Coefficient::Sym(a) => Coefficient::Sym(a.scale(q)),
            Coefficient::Num(a) => Coefficient::Num(Coeff::scale(a, q)),
        }
    }
}

fn cached_zeta(idx: &[u32], tol: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(Vec<u32>, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (idx.to_vec(), tol.to_bits());
    if let Some(v) = cache.lock().expect("zeta cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = mzv::mzv_eval(idx, tol)?;
    cache.lock().expect("zeta cache poisoned").insert(key, v);
    Ok(v)
}

/// Bernoulli number B_n (with B_1 = -1/2).
pub fn bernoulli(n: usize) -> Rational {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rational::one());
            continue;
        }
        let mut s = Rational::zero();
        for (k, bk) in b.iter().enumerate() {
            s += binomial(m + 1, k) * bk;
        }
        b.push(-s / rat_int(m as i64 + 1));
    }
    b[n].clone()
}

/// ζ(2k) = -B_{2k} 2^{2k-1} / (2k)! · (iπ)^{2k}.
fn even_zeta(k: u32) -> SymCoeff {
    let n = 2 * k as usize;
    let q = -bernoulli(n) * Rational::from_integer(BigInt::one() << (n - 1)) / Rational::from_integer(factorial(n));
    SymCoeff::monomial(2 * k, 0, MzvMonomial::one(), q)
}

fn zeta_poly(pi2: Rational, z3_pi2: Rational, z5: Rational, z3: Rational) -> SymCoeff {
    // pi2·(iπ)^4 + z3_pi2·(iπ)^2 ζ(3) + z5·ζ(5) + z3·ζ(3)
    let mut c = SymCoeff::default();
    c.push(SymKey { ipi: 4, lneps: 0, zetas: MzvMonomial::one() }, pi2);
    c.push(SymKey { ipi: 2, lneps: 0, zetas: MzvMonomial(vec![vec![3]]) }, z3_pi2);
    c.push(SymKey { ipi: 0, lneps: 0, zetas: MzvMonomial(vec![vec![5]]) }, z5);
    c.push(SymKey { ipi: 0, lneps: 0, zetas: MzvMonomial(vec![vec![3]]) }, z3);
    c
}

/// Reduction table for admissible indices of weight three to five, written
/// over (iπ)^4, (iπ)^2 ζ(3), ζ(5) and ζ(3).
pub fn reduction_table() -> Vec<(Vec<u32>, SymCoeff)> {
    let z = Rational::zero;
    vec![
        (vec![3], zeta_poly(z(), z(), z(), rat_int(1))),
        (vec![2, 1], zeta_poly(z(), z(), z(), rat_int(1))),
        (vec![4], zeta_poly(rat(1, 90), z(), z(), z())),
        (vec![3, 1], zeta_poly(rat(1, 360), z(), z(), z())),
        (vec![2, 2], zeta_poly(rat(1, 120), z(), z(), z())),
        (vec![2, 1, 1], zeta_poly(rat(1, 90), z(), z(), z())),
        (vec![5], zeta_poly(z(), z(), rat_int(1), z())),
        (vec![2, 1, 1, 1], zeta_poly(z(), z(), rat_int(1), z())),
        // 2ζ(5) - ζ(2)ζ(3)
        (vec![4, 1], zeta_poly(z(), rat(1, 6), rat_int(2), z())),
        (vec![3, 1, 1], zeta_poly(z(), rat(1, 6), rat_int(2), z())),
        // 3ζ(2)ζ(3) - 11/2 ζ(5)
        (vec![3, 2], zeta_poly(z(), rat(-1, 2), rat(-11, 2), z())),
        (vec![2, 2, 1], zeta_poly(z(), rat(-1, 2), rat(-11, 2), z())),
        // 9/2 ζ(5) - 2ζ(2)ζ(3)
        (vec![2, 3], zeta_poly(z(), rat(1, 3), rat(9, 2), z())),
        (vec![2, 1, 2], zeta_poly(z(), rat(1, 3), rat(9, 2), z())),
    ]
}

fn reduce_index(idx: &[u32]) -> SymCoeff {
    static TABLE: OnceLock<HashMap<Vec<u32>, SymCoeff>> = OnceLock::new();
    let table = TABLE.get_or_init(|| reduction_table().into_iter().collect());
    if idx.len() == 1 && idx[0].is_even() {
        return even_zeta(idx[0] / 2);
    }
    if let Some(c) = table.get(idx) {
        return c.clone();
    }
    SymCoeff::monomial(0, 0, MzvMonomial(vec![idx.to_vec()]), Rational::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ipi_squared() {
        let c = SymCoeff::ipi().mul(&SymCoeff::ipi());
        assert_eq!(c, SymCoeff::monomial(2, 0, MzvMonomial::one(), rat_int(1)));
    }

    #[test]
    fn additive_inverse_is_empty() {
        let z = SymCoeff::zeta(&[2]).unwrap();
        assert!(z.add(&z.neg()).is_empty());
    }

    #[test]
    fn scalar_action() {
        let c = SymCoeff::lneps().mul(&SymCoeff::zeta(&[2]).unwrap()).scale(&rat(1, 2));
        let terms: Vec<_> = c.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0.lneps, 1);
        assert_eq!(terms[0].0.zetas.factors(), &[vec![2]]);
        assert_eq!(terms[0].1, &rat(1, 2));
    }

    #[test]
    fn inadmissible_rejected() {
        assert_eq!(SymCoeff::zeta(&[1, 2]), Err(Error::Inadmissible(vec![1, 2])));
    }

    #[test]
    fn eval_examples() {
        let z2 = SymCoeff::zeta(&[2]).unwrap().eval(0.3, 1e-13).unwrap();
        assert!((z2.re - 1.6449340668482264).abs() < 1e-11);
        let p2 = SymCoeff::ipi().pow(2).eval(0.3, 1e-12).unwrap();
        assert!((p2.re + std::f64::consts::PI.powi(2)).abs() < 1e-12);
        let l2 = SymCoeff::lneps().pow(2).eval((-1.0f64).exp(), 1e-12).unwrap();
        assert!((l2.re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(2), rat(1, 6));
        assert_eq!(bernoulli(4), rat(-1, 30));
        assert_eq!(bernoulli(6), rat(1, 42));
        assert_eq!(even_zeta(1), SymCoeff::monomial(2, 0, MzvMonomial::one(), rat(-1, 6)));
    }

    #[test]
    fn domain_mismatch() {
        let a = Coefficient::Sym(SymCoeff::one());
        let b = Coefficient::Num(Complex64::new(1.0, 0.0));
        assert!(matches!(a.try_add(&b), Err(Error::DomainMismatch(_, _))));
        assert!(a.try_mul(&a).is_ok());
    }
}
