//! Truncated free algebra on `{t12, t13, t23}` and its bimodule of
//! relator words, modelling the second Drinfeld–Kohno differential crossed module.
//!
//! Grades: every `t` letter has grade 1, the relators `𝓛`, `𝓡` have grade
//! [`RELATOR_GRADE`] so that the coboundary preserves grade.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;
use serde_json::{json, Value};

use crate::coeffring::{binomial, inv_factorial, rat_int, Coeff, Rational};
use crate::error::{Error, Result};

/// Letter indices of the three-generator alphabet.
pub const T12: u8 = 0;
pub const T13: u8 = 1;
pub const T23: u8 = 2;
/// Letter indices of the two-letter alphabet used for the associator.
pub const A: u8 = 0;
pub const B: u8 = 1;

pub const T_NAMES: [&str; 3] = ["t12", "t13", "t23"];
pub const AB_NAMES: [&str; 2] = ["A", "B"];

/// Grade carried by `𝓛` and `𝓡`; equals the grade of their coboundaries.
pub const RELATOR_GRADE: usize = 2;

pub type Word = Vec<u8>;

/// Pair `{i, j}` (1-based, unordered) to its letter index.
pub fn pair_letter(i: u8, j: u8) -> u8 {
    match (i.min(j), i.max(j)) {
        (1, 2) => T12,
        (1, 3) => T13,
        (2, 3) => T23,
        _ => panic!("invalid label pair ({i}, {j})"),
    }
}

/// Unordered pair `{i, j}` represented by a letter.
pub fn letter_pair(l: u8) -> (u8, u8) {
    match l {
        T12 => (1, 2),
        T13 => (1, 3),
        T23 => (2, 3),
        _ => panic!("invalid letter {l}"),
    }
}

/// A permutation of `{1, 2, 3}` stored by its images: `Perm([a, b, c])`
/// sends `1 ↦ a`, `2 ↦ b`, `3 ↦ c`. Written `abc` in index notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(pub [u8; 3]);

impl Perm {
    pub const ID: Perm = Perm([1, 2, 3]);
    pub const P213: Perm = Perm([2, 1, 3]);
    pub const P132: Perm = Perm([1, 3, 2]);
    pub const P321: Perm = Perm([3, 2, 1]);
    pub const P231: Perm = Perm([2, 3, 1]);
    pub const P312: Perm = Perm([3, 1, 2]);

    pub fn all() -> [Perm; 6] {
        [Perm::ID, Perm::P213, Perm::P132, Perm::P321, Perm::P231, Perm::P312]
    }

    /// Parses `"213"`-style notation.
    pub fn parse(s: &str) -> Result<Perm> {
        let d: Vec<u8> = s.bytes().map(|b| b.wrapping_sub(b'0')).collect();
        if d.len() != 3 {
            return Err(Error::Domain(format!("bad permutation {s:?}")));
        }
        let mut seen = [false; 4];
        for &x in &d {
            if !(1..=3).contains(&x) || seen[x as usize] {
                return Err(Error::Domain(format!("bad permutation {s:?}")));
            }
            seen[x as usize] = true;
        }
        Ok(Perm([d[0], d[1], d[2]]))
    }

    pub fn apply(&self, i: u8) -> u8 {
        self.0[(i - 1) as usize]
    }

    /// First `self`, then `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm([other.apply(self.0[0]), other.apply(self.0[1]), other.apply(self.0[2])])
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = [0u8; 3];
        for i in 1..=3u8 {
            inv[(self.apply(i) - 1) as usize] = i;
        }
        Perm(inv)
    }

    pub fn permute_letter(&self, l: u8) -> u8 {
        let (i, j) = letter_pair(l);
        pair_letter(self.apply(i), self.apply(j))
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.0[0], self.0[1], self.0[2])
    }
}

fn check_order(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::OrderMismatch(a, b))
    }
}

fn add_term<K: Ord, C: Coeff>(map: &mut BTreeMap<K, C>, key: K, c: C) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match map.entry(key) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            o.get_mut().add_assign(&c);
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

fn word_string(w: &[u8], names: &[&str]) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.iter().map(|&l| names[l as usize]).collect::<Vec<_>>().join(".")
}

/// Truncated noncommutative series `Σ c_w w` with `|w| ≤ order`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraSeries<C> {
    order: usize,
    terms: BTreeMap<Word, C>,
}

impl<C: Coeff> AlgebraSeries<C> {
    pub fn zero(order: usize) -> Self {
        AlgebraSeries { order, terms: BTreeMap::new() }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(C::one(), order)
    }

    pub fn constant(c: C, order: usize) -> Self {
        Self::monomial(Vec::new(), c, order)
    }

    pub fn letter(l: u8, order: usize) -> Self {
        Self::monomial(vec![l], C::one(), order)
    }

    pub fn monomial(w: Word, c: C, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.add_monomial(w, c);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, C)>>(order: usize, it: I) -> Self {
        let mut s = Self::zero(order);
        for (w, c) in it {
            s.add_monomial(w, c);
        }
        s
    }

    /// Adds `c·w`; words longer than the order are dropped.
    pub fn add_monomial(&mut self, w: Word, c: C) {
        if w.len() <= self.order {
            add_term(&mut self.terms, w, c);
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Word, C> {
        &self.terms
    }

    pub fn coeff(&self, w: &[u8]) -> C {
        self.terms.get(w).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-truncates (or pads) to a new order.
    pub fn with_order(&self, order: usize) -> Self {
        AlgebraSeries {
            order,
            terms: self.terms.iter().filter(|(w, _)| w.len() <= order).map(|(w, c)| (w.clone(), c.clone())).collect(),
        }
    }

    pub fn extract_grade(&self, k: usize) -> Self {
        AlgebraSeries {
            order: self.order,
            terms: self.terms.iter().filter(|(w, _)| w.len() == k).map(|(w, c)| (w.clone(), c.clone())).collect(),
        }
    }

    pub fn min_grade(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.len()).min()
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut s = Self::zero(self.order);
        for (w, x) in &self.terms {
            s.add_monomial(w.clone(), x.mul(c));
        }
        s
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        self.scale(&C::from_rational(q))
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> AlgebraSeries<D> {
        let mut s = AlgebraSeries::zero(self.order);
        for (w, c) in &self.terms {
            s.add_monomial(w.clone(), f(c));
        }
        s
    }

    pub fn try_map_coeffs<D: Coeff, F: Fn(&C) -> Result<D>>(&self, f: F) -> Result<AlgebraSeries<D>> {
        let mut s = AlgebraSeries::zero(self.order);
        for (w, c) in &self.terms {
            s.add_monomial(w.clone(), f(c)?);
        }
        Ok(s)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_order(self.order, other.order)?;
        let mut s = self.clone();
        for (w, c) in &other.terms {
            add_term(&mut s.terms, w.clone(), c.clone());
        }
        Ok(s)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_series())
    }

    fn neg_series(&self) -> Self {
        AlgebraSeries { order: self.order, terms: self.terms.iter().map(|(w, c)| (w.clone(), c.neg())).collect() }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        check_order(self.order, other.order)?;
        let mut s = Self::zero(self.order);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                if wa.len() + wb.len() > self.order {
                    continue;
                }
                let mut w = Vec::with_capacity(wa.len() + wb.len());
                w.extend_from_slice(wa);
                w.extend_from_slice(wb);
                add_term(&mut s.terms, w, ca.mul(cb));
            }
        }
        Ok(s)
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut acc = Self::one(self.order);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// `Σ_{k≤N} a^k / k!`; requires a vanishing constant term.
    pub fn try_exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let mut acc = Self::one(self.order);
        let mut power = Self::one(self.order);
        for k in 1..=self.order {
            power = &power * self;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power.scale_rational(&inv_factorial(k));
        }
        Ok(acc)
    }

    /// Geometric-series inverse; requires constant term 1.
    pub fn try_inverse(&self) -> Result<Self> {
        if self.constant_term() != C::one() {
            return Err(Error::NonUnitConstant);
        }
        let nil = self - &Self::one(self.order);
        let mut acc = Self::one(self.order);
        let mut power = Self::one(self.order);
        for k in 1..=self.order {
            power = &power * &nil;
            if power.is_zero() {
                break;
            }
            let term = if k % 2 == 1 { -&power } else { power.clone() };
            acc = &acc + &term;
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Self {
        self.try_exp().expect("exp of series with nonzero constant term")
    }

    pub fn inverse(&self) -> Self {
        self.try_inverse().expect("inverse of series with non-unit constant term")
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Substitutes `letter i ↦ images[i]`; images must have zero constant term.
    pub fn try_substitute(&self, images: &[AlgebraSeries<C>], order: usize) -> Result<Self> {
        for im in images {
            if !im.constant_term().is_zero() {
                return Err(Error::NonzeroConstant);
            }
        }
        let images: Vec<AlgebraSeries<C>> = images.iter().map(|im| im.with_order(order)).collect();
        let mut cache: BTreeMap<Word, AlgebraSeries<C>> = BTreeMap::new();
        let mut out = Self::zero(order);
        for (w, c) in &self.terms {
            if w.len() > order {
                continue;
            }
            let val = substitute_word(w, &images, order, &mut cache);
            for (w2, c2) in &val.terms {
                add_term(&mut out.terms, w2.clone(), c2.mul(c));
            }
        }
        Ok(out)
    }

    pub fn permute(&self, p: Perm) -> Self {
        let mut s = Self::zero(self.order);
        for (w, c) in &self.terms {
            s.add_monomial(w.iter().map(|&l| p.permute_letter(l)).collect(), c.clone());
        }
        s
    }

    /// Applies the derivation `D` with `D(t12) = −𝓛`, `D(t13) = 𝓛+𝓡`,
    /// `D(t23) = −𝓡`, which satisfies `∂D(x) = [Λ, x]`.
    pub fn lambda_lift(&self) -> BimoduleSeries<C> {
        let mut out = BimoduleSeries::zero(self.order);
        for (w, c) in &self.terms {
            if w.len() + RELATOR_GRADE - 1 > self.order {
                continue;
            }
            for i in 0..w.len() {
                let left = w[..i].to_vec();
                let right = w[i + 1..].to_vec();
                let parts: &[(ModLetter, i64)] = match w[i] {
                    T12 => &[(ModLetter::L, -1)],
                    T13 => &[(ModLetter::L, 1), (ModLetter::R, 1)],
                    T23 => &[(ModLetter::R, -1)],
                    _ => panic!("lambda_lift needs the three-letter alphabet"),
                };
                for &(letter, sign) in parts {
                    out.add_monomial(
                        ModWord { left: left.clone(), letter, right: right.clone() },
                        c.scale(&rat_int(sign)),
                    );
                }
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn max_abs_in_grade(&self, k: usize) -> f64 {
        self.terms.iter().filter(|(w, _)| w.len() == k).map(|(_, c)| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn to_json_with(&self, names: &[&str]) -> Value {
        json!({
            "order": self.order,
            "terms": self.terms.iter().map(|(w, c)| json!({"word": word_string(w, names), "coeff": c.to_json()})).collect::<Vec<_>>(),
            "modterms": [],
        })
    }

    pub fn to_json(&self) -> Value {
        self.to_json_with(&T_NAMES)
    }
}

fn substitute_word<C: Coeff>(
    w: &[u8],
    images: &[AlgebraSeries<C>],
    order: usize,
    cache: &mut BTreeMap<Word, AlgebraSeries<C>>,
) -> AlgebraSeries<C> {
    if w.is_empty() {
        return AlgebraSeries::one(order);
    }
    if let Some(v) = cache.get(w) {
        return v.clone();
    }
    let head = substitute_word(&w[..w.len() - 1], images, order, cache);
    let v = &head * &images[w[w.len() - 1] as usize];
    cache.insert(w.to_vec(), v.clone());
    v
}

/// `Λ = t12 + t13 + t23`.
pub fn lambda<C: Coeff>(order: usize) -> AlgebraSeries<C> {
    AlgebraSeries::from_terms(order, [(vec![T12], C::one()), (vec![T13], C::one()), (vec![T23], C::one())])
}

pub fn t<C: Coeff>(l: u8, order: usize) -> AlgebraSeries<C> {
    AlgebraSeries::letter(l, order)
}

/// `t̄13 = t13 − Λ = −(t12 + t23)`.
pub fn t13_bar<C: Coeff>(order: usize) -> AlgebraSeries<C> {
    &t(T13, order) - &lambda(order)
}

/// `t̄12 = t12 − Λ`.
pub fn t12_bar<C: Coeff>(order: usize) -> AlgebraSeries<C> {
    &t(T12, order) - &lambda(order)
}

/// `t_(12)3 = t13 + t23`.
pub fn t12_3<C: Coeff>(order: usize) -> AlgebraSeries<C> {
    &t(T13, order) + &t(T23, order)
}

/// `t_1(23) = t12 + t13`.
pub fn t1_23<C: Coeff>(order: usize) -> AlgebraSeries<C> {
    &t(T12, order) + &t(T13, order)
}

/// `t̄_(12)3 = t_(12)3 − Λ = −t12`.
pub fn t12_3_bar<C: Coeff>(order: usize) -> AlgebraSeries<C> {
    &t12_3(order) - &lambda(order)
}

/// `(A+B)^n` via either expansion identity of the noncommutative binomial lemma.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinomialForm {
    /// `A^n + Σ_{m<n} (A+B)^{n−1−m} B A^m`
    Easy,
    /// `Σ_p C(n,p) A^{n−p} B^p + Σ_{j,k} C(n−j,k) (A+B)^{j−1} [B, A^{n−j−k}] B^k`
    Hard,
}

pub fn noncomm_binomial_expand<C: Coeff>(
    a: &AlgebraSeries<C>,
    b: &AlgebraSeries<C>,
    n: usize,
    form: BinomialForm,
) -> AlgebraSeries<C> {
    let sum = a + b;
    match form {
        BinomialForm::Easy => {
            let mut acc = a.pow(n);
            for m in 0..n {
                acc = &acc + &(&(&sum.pow(n - 1 - m) * b) * &a.pow(m));
            }
            acc
        }
        BinomialForm::Hard => {
            let mut acc = AlgebraSeries::zero(a.order());
            for p in 0..=n {
                acc = &acc + &(&a.pow(n - p) * &b.pow(p)).scale_rational(&binomial(n, p));
            }
            for j in 1..n {
                for k in 0..n - j {
                    let comm = b.commutator(&a.pow(n - j - k));
                    let term = &(&sum.pow(j - 1) * &comm) * &b.pow(k);
                    acc = &acc + &term.scale_rational(&binomial(n - j, k));
                }
            }
            acc
        }
    }
}

/// `ad_B^q(A)` by iterated commutators.
pub fn ad_power<C: Coeff>(b: &AlgebraSeries<C>, a: &AlgebraSeries<C>, q: usize) -> AlgebraSeries<C> {
    let mut x = a.clone();
    for _ in 0..q {
        x = b.commutator(&x);
    }
    x
}

/// `Σ_k C(q,k) (−1)^k B^{q−k} A B^k`.
pub fn ad_power_closed<C: Coeff>(b: &AlgebraSeries<C>, a: &AlgebraSeries<C>, q: usize) -> AlgebraSeries<C> {
    let mut acc = AlgebraSeries::zero(a.order());
    for k in 0..=q {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let term = &(&b.pow(q - k) * a) * &b.pow(k);
        acc = &acc + &term.scale_rational(&(binomial(q, k) * rat_int(sign)));
    }
    acc
}

/// Relator letters of the bimodule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModLetter {
    L,
    R,
}

impl ModLetter {
    pub fn name(&self) -> &'static str {
        match self {
            ModLetter::L => "L",
            ModLetter::R => "R",
        }
    }
}

/// `left · X · right` with `X ∈ {𝓛, 𝓡}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModWord {
    pub left: Word,
    pub letter: ModLetter,
    pub right: Word,
}

impl ModWord {
    pub fn bare(letter: ModLetter) -> Self {
        ModWord { left: Vec::new(), letter, right: Vec::new() }
    }

    pub fn grade(&self) -> usize {
        self.left.len() + self.right.len() + RELATOR_GRADE
    }

    pub fn display_with(&self, names: &[&str]) -> String {
        let mut parts = Vec::new();
        if !self.left.is_empty() {
            parts.push(word_string(&self.left, names));
        }
        parts.push(self.letter.name().to_string());
        if !self.right.is_empty() {
            parts.push(word_string(&self.right, names));
        }
        parts.join(".")
    }
}

/// Relator of the unordered pair `{i, j}`: `{1,2} ↦ 𝓛`, `{2,3} ↦ 𝓡`,
/// `{1,3} ↦ −(𝓛+𝓡)`. Each satisfies `∂ rel(ij) = [t_ij, Λ]`.
fn pair_relator(i: u8, j: u8) -> &'static [(ModLetter, i64)] {
    match pair_letter(i, j) {
        T12 => &[(ModLetter::L, 1)],
        T23 => &[(ModLetter::R, 1)],
        _ => &[(ModLetter::L, -1), (ModLetter::R, -1)],
    }
}

/// Truncated series of relator words.
#[derive(Clone, Debug, PartialEq)]
pub struct BimoduleSeries<C> {
    order: usize,
    terms: BTreeMap<ModWord, C>,
}

impl<C: Coeff> BimoduleSeries<C> {
    pub fn zero(order: usize) -> Self {
        BimoduleSeries { order, terms: BTreeMap::new() }
    }

    pub fn relator(letter: ModLetter, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.add_monomial(ModWord::bare(letter), C::one());
        s
    }

    pub fn l(order: usize) -> Self {
        Self::relator(ModLetter::L, order)
    }

    pub fn r(order: usize) -> Self {
        Self::relator(ModLetter::R, order)
    }

    pub fn add_monomial(&mut self, w: ModWord, c: C) {
        if w.grade() <= self.order {
            add_term(&mut self.terms, w, c);
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<ModWord, C> {
        &self.terms
    }

    pub fn coeff(&self, w: &ModWord) -> C {
        self.terms.get(w).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_order(&self, order: usize) -> Self {
        BimoduleSeries {
            order,
            terms: self.terms.iter().filter(|(w, _)| w.grade() <= order).map(|(w, c)| (w.clone(), c.clone())).collect(),
        }
    }

    pub fn extract_grade(&self, k: usize) -> Self {
        BimoduleSeries {
            order: self.order,
            terms: self.terms.iter().filter(|(w, _)| w.grade() == k).map(|(w, c)| (w.clone(), c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut s = Self::zero(self.order);
        for (w, x) in &self.terms {
            s.add_monomial(w.clone(), x.mul(c));
        }
        s
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        self.scale(&C::from_rational(q))
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> BimoduleSeries<D> {
        let mut s = BimoduleSeries::zero(self.order);
        for (w, c) in &self.terms {
            s.add_monomial(w.clone(), f(c));
        }
        s
    }

    pub fn try_map_coeffs<D: Coeff, F: Fn(&C) -> Result<D>>(&self, f: F) -> Result<BimoduleSeries<D>> {
        let mut s = BimoduleSeries::zero(self.order);
        for (w, c) in &self.terms {
            s.add_monomial(w.clone(), f(c)?);
        }
        Ok(s)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_order(self.order, other.order)?;
        let mut s = self.clone();
        for (w, c) in &other.terms {
            add_term(&mut s.terms, w.clone(), c.clone());
        }
        Ok(s)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&-other)
    }

    /// `a · m`.
    pub fn try_left_act(&self, a: &AlgebraSeries<C>) -> Result<Self> {
        check_order(self.order, a.order)?;
        let mut s = Self::zero(self.order);
        for (wa, ca) in &a.terms {
            for (wm, cm) in &self.terms {
                if wa.len() + wm.grade() > self.order {
                    continue;
                }
                let mut left = wa.clone();
                left.extend_from_slice(&wm.left);
                add_term(&mut s.terms, ModWord { left, letter: wm.letter, right: wm.right.clone() }, ca.mul(cm));
            }
        }
        Ok(s)
    }

    /// `m · a`.
    pub fn try_right_act(&self, a: &AlgebraSeries<C>) -> Result<Self> {
        check_order(self.order, a.order)?;
        let mut s = Self::zero(self.order);
        for (wm, cm) in &self.terms {
            for (wa, ca) in &a.terms {
                if wa.len() + wm.grade() > self.order {
                    continue;
                }
                let mut right = wm.right.clone();
                right.extend_from_slice(wa);
                add_term(&mut s.terms, ModWord { left: wm.left.clone(), letter: wm.letter, right }, cm.mul(ca));
            }
        }
        Ok(s)
    }

    /// `a ▷ m = a·m − m·a`.
    pub fn try_triangle(&self, a: &AlgebraSeries<C>) -> Result<Self> {
        self.try_left_act(a)?.try_sub(&self.try_right_act(a)?)
    }

    pub fn triangle(a: &AlgebraSeries<C>, m: &Self) -> Self {
        m.try_triangle(a).expect("order mismatch in triangle action")
    }

    /// `∂`: `𝓛 ↦ [t12, t13+t23]`, `𝓡 ↦ [t23, t12+t13]`, extended bimodule-linearly.
    pub fn coboundary(&self) -> AlgebraSeries<C> {
        let mut out = AlgebraSeries::zero(self.order);
        for (w, c) in &self.terms {
            let (x, ys): (u8, [u8; 2]) = match w.letter {
                ModLetter::L => (T12, [T13, T23]),
                ModLetter::R => (T23, [T12, T13]),
            };
            for y in ys {
                for (first, second, sign) in [(x, y, 1i64), (y, x, -1)] {
                    let mut word = w.left.clone();
                    word.push(first);
                    word.push(second);
                    word.extend_from_slice(&w.right);
                    out.add_monomial(word, c.scale(&rat_int(sign)));
                }
            }
        }
        out
    }

    /// Relabels `t`-letters and rewrites relators by the pair rule
    /// `𝓛 ↦ rel(σ1σ2)`, `𝓡 ↦ rel(σ2σ3)`.
    pub fn permute(&self, p: Perm) -> Self {
        let mut s = Self::zero(self.order);
        for (w, c) in &self.terms {
            let left: Word = w.left.iter().map(|&l| p.permute_letter(l)).collect();
            let right: Word = w.right.iter().map(|&l| p.permute_letter(l)).collect();
            let (i, j) = match w.letter {
                ModLetter::L => (p.apply(1), p.apply(2)),
                ModLetter::R => (p.apply(2), p.apply(3)),
            };
            for &(letter, sign) in pair_relator(i, j) {
                s.add_monomial(ModWord { left: left.clone(), letter, right: right.clone() }, c.scale(&rat_int(sign)));
            }
        }
        s
    }

    /// Peiffer bracket `∂(m₁)·m₂ − ∂(m₂)·m₁`.
    pub fn peiffer(&self, other: &Self) -> Self {
        &(&self.coboundary() * other) - &(&other.coboundary() * self)
    }

    /// Coefficients of the bare words `𝓛` and `𝓡`.
    pub fn bare_coeffs(&self) -> (C, C) {
        (self.coeff(&ModWord::bare(ModLetter::L)), self.coeff(&ModWord::bare(ModLetter::R)))
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn max_abs_in_grade(&self, k: usize) -> f64 {
        self.terms.iter().filter(|(w, _)| w.grade() == k).map(|(_, c)| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "order": self.order,
            "terms": [],
            "modterms": self.terms.iter().map(|(w, c)| json!({
                "left": word_string(&w.left, &T_NAMES),
                "letter": w.letter.name(),
                "right": word_string(&w.right, &T_NAMES),
                "coeff": c.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl<C: Coeff> fmt::Display for AlgebraSeries<C>
where
    C: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(w, c)| format!("({c})·{}", word_string(w, &T_NAMES))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<C: Coeff> fmt::Display for BimoduleSeries<C>
where
    C: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(w, c)| format!("({c})·{}", w.display_with(&T_NAMES))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

// Operator impls panic on truncation-order mismatch; use the `try_` methods
// where orders are not known to agree.

impl<C: Coeff> Add for &AlgebraSeries<C> {
    type Output = AlgebraSeries<C>;
    fn add(self, rhs: Self) -> AlgebraSeries<C> {
        self.try_add(rhs).expect("order mismatch in series addition")
    }
}

impl<C: Coeff> Sub for &AlgebraSeries<C> {
    type Output = AlgebraSeries<C>;
    fn sub(self, rhs: Self) -> AlgebraSeries<C> {
        self.try_sub(rhs).expect("order mismatch in series subtraction")
    }
}

impl<C: Coeff> Neg for &AlgebraSeries<C> {
    type Output = AlgebraSeries<C>;
    fn neg(self) -> AlgebraSeries<C> {
        self.neg_series()
    }
}

impl<C: Coeff> Mul for &AlgebraSeries<C> {
    type Output = AlgebraSeries<C>;
    fn mul(self, rhs: Self) -> AlgebraSeries<C> {
        self.try_mul(rhs).expect("order mismatch in series product")
    }
}

impl<C: Coeff> Add for &BimoduleSeries<C> {
    type Output = BimoduleSeries<C>;
    fn add(self, rhs: Self) -> BimoduleSeries<C> {
        self.try_add(rhs).expect("order mismatch in bimodule addition")
    }
}

impl<C: Coeff> Sub for &BimoduleSeries<C> {
    type Output = BimoduleSeries<C>;
    fn sub(self, rhs: Self) -> BimoduleSeries<C> {
        self.try_sub(rhs).expect("order mismatch in bimodule subtraction")
    }
}

impl<C: Coeff> Neg for &BimoduleSeries<C> {
    type Output = BimoduleSeries<C>;
    fn neg(self) -> BimoduleSeries<C> {
        BimoduleSeries { order: self.order, terms: self.terms.iter().map(|(w, c)| (w.clone(), c.neg())).collect() }
    }
}

impl<C: Coeff> Mul<&BimoduleSeries<C>> for &AlgebraSeries<C> {
    type Output = BimoduleSeries<C>;
    fn mul(self, rhs: &BimoduleSeries<C>) -> BimoduleSeries<C> {
        rhs.try_left_act(self).expect("order mismatch in left action")
    }
}

impl<C: Coeff> Mul<&AlgebraSeries<C>> for &BimoduleSeries<C> {
    type Output = BimoduleSeries<C>;
    fn mul(self, rhs: &AlgebraSeries<C>) -> BimoduleSeries<C> {
        self.try_right_act(rhs).expect("order mismatch in right action")
    }
}

/// Row-reduced basis of the interchange sub-bimodule, spanned by
/// `m·∂m′ − ∂m·m′` over relator monomials `m, m′`.
///
/// These elements lie in `ker ∂` and vanish in the crossed module, where
/// horizontal composites of 2-cells obey the interchange law. The free relator
/// bimodule does not impose them; reducing modulo this span recovers
/// identities that rely on interchange. Grades below `2·RELATOR_GRADE` are unaffected.
#[derive(Clone, Debug)]
pub struct InterchangeBasis {
    order: usize,
    rows: BTreeMap<ModWord, BTreeMap<ModWord, Rational>>,
}

fn words_of_len(len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                [T12, T13, T23].into_iter().map(move |l| {
                    let mut w2 = w.clone();
                    w2.push(l);
                    w2
                })
            })
            .collect();
    }
    out
}

fn relator_monomials(grade: usize) -> Vec<ModWord> {
    let mut out = Vec::new();
    for l in 0..=grade - RELATOR_GRADE {
        for left in words_of_len(l) {
            for right in words_of_len(grade - RELATOR_GRADE - l) {
                for letter in [ModLetter::L, ModLetter::R] {
                    out.push(ModWord { left: left.clone(), letter, right: right.clone() });
                }
            }
        }
    }
    out
}

fn monomial_coboundary(m: &ModWord) -> Vec<(Word, i64)> {
    let (x, ys): (u8, [u8; 2]) = match m.letter {
        ModLetter::L => (T12, [T13, T23]),
        ModLetter::R => (T23, [T12, T13]),
    };
    let mut out = Vec::new();
    for y in ys {
        for (a, b, sign) in [(x, y, 1), (y, x, -1)] {
            let mut w = m.left.clone();
            w.push(a);
            w.push(b);
            w.extend_from_slice(&m.right);
            out.push((w, sign));
        }
    }
    out
}

impl InterchangeBasis {
    pub fn new(order: usize) -> Self {
        let mut basis = InterchangeBasis { order, rows: BTreeMap::new() };
        let g0 = RELATOR_GRADE;
        for total in 2 * g0..=order {
            for g in g0..=total - g0 {
                let ms = relator_monomials(g);
                let ns = relator_monomials(total - g);
                for m in &ms {
                    let dm = monomial_coboundary(m);
                    for n in &ns {
                        let mut v: BTreeMap<ModWord, Rational> = BTreeMap::new();
                        for (w, sign) in monomial_coboundary(n) {
                            let mut right = m.right.clone();
                            right.extend_from_slice(&w);
                            let key = ModWord { left: m.left.clone(), letter: m.letter, right };
                            *v.entry(key).or_insert_with(Rational::zero) += rat_int(sign);
                        }
                        for (w, sign) in &dm {
                            let mut left = w.clone();
                            left.extend_from_slice(&n.left);
                            let key = ModWord { left, letter: n.letter, right: n.right.clone() };
                            *v.entry(key).or_insert_with(Rational::zero) -= rat_int(*sign);
                        }
                        basis.insert(v);
                    }
                }
            }
        }
        basis
    }

    fn insert(&mut self, mut v: BTreeMap<ModWord, Rational>) {
        for (p, row) in &self.rows {
            if let Some(c) = v.get(p).cloned() {
                for (w, q) in row {
                    *v.entry(w.clone()).or_insert_with(Rational::zero) -= &c * q;
                }
            }
        }
        v.retain(|_, q| !q.is_zero());
        let Some((pivot, lead)) = v.iter().next().map(|(k, q)| (k.clone(), q.clone())) else {
            return;
        };
        for q in v.values_mut() {
            *q /= &lead;
        }
        for row in self.rows.values_mut() {
            if let Some(c) = row.get(&pivot).cloned() {
                for (w, q) in &v {
                    *row.entry(w.clone()).or_insert_with(Rational::zero) -= &c * q;
                }
                row.retain(|_, q| !q.is_zero());
            }
        }
        self.rows.insert(pivot, v);
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Dimension of the span up to the construction order.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Canonical representative modulo the span.
    pub fn reduce<C: Coeff>(&self, m: &BimoduleSeries<C>) -> BimoduleSeries<C> {
        let mut out = m.clone();
        for (p, row) in &self.rows {
            let c = out.coeff(p);
            if c.is_zero() {
                continue;
            }
            for (w, q) in row {
                out.add_monomial(w.clone(), c.scale(q).neg());
            }
        }
        out
    }
}
