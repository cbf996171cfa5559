//! Dense coefficient vectors for truncated series, used inside the ODE integrators.
//!
//! A word of length `k` over an alphabet of size `m` sits at offset
//! `(m^k − 1)/(m − 1)` plus its base-`m` value (first letter most significant).
//! Relator words are grouped by `(|left| + |right|, |left|, letter)`.

use num_complex::Complex64;

use crate::dk2::{AlgebraSeries, BimoduleSeries, ModLetter, ModWord, Word, RELATOR_GRADE};

#[derive(Clone, Debug)]
pub struct Layout {
    pub letters: usize,
    pub order: usize,
    pows: Vec<usize>,
    offsets: Vec<usize>,
    /// `mod_offsets[t][l]` starts the block with `|left| = l`, `|left|+|right| = t`.
    mod_offsets: Vec<Vec<usize>>,
    mod_dim: usize,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl Layout {
    pub fn new(letters: usize, order: usize) -> Self {
        let pows: Vec<usize> = (0..=order + 1).map(|k| letters.pow(k as u32)).collect();
        let mut offsets = Vec::with_capacity(order + 2);
        let mut acc = 0;
        for p in pows.iter().take(order + 2) {
            offsets.push(acc);
            acc += p;
        }
        let mut mod_offsets = Vec::new();
        let mut m = 0;
        if order >= RELATOR_GRADE {
            for t in 0..=order - RELATOR_GRADE {
                let mut row = Vec::with_capacity(t + 1);
                for _ in 0..=t {
                    row.push(m);
                    m += 2 * pows[t];
                }
                mod_offsets.push(row);
            }
        }
        Layout { letters, order, pows, offsets, mod_offsets, mod_dim: m }
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.order + 1]
    }

    pub fn mod_dim(&self) -> usize {
        self.mod_dim
    }

    fn value(&self, w: &[u8]) -> usize {
        w.iter().fold(0, |acc, &l| acc * self.letters + l as usize)
    }

    fn word_of(&self, len: usize, mut value: usize) -> Word {
        let mut w = vec![0u8; len];
        for i in (0..len).rev() {
            w[i] = (value % self.letters) as u8;
            value /= self.letters;
        }
        w
    }

    pub fn index(&self, w: &[u8]) -> usize {
        self.offsets[w.len()] + self.value(w)
    }

    pub fn mod_index(&self, w: &ModWord) -> usize {
        let t = w.left.len() + w.right.len();
        let letter = match w.letter {
            ModLetter::L => 0,
            ModLetter::R => 1,
        };
        let rp = self.pows[w.right.len()];
        self.mod_offsets[t][w.left.len()] + letter * self.pows[t] + self.value(&w.left) * rp + self.value(&w.right)
    }

    pub fn one(&self) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.dim()];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn to_series(&self, v: &[Complex64]) -> AlgebraSeries<Complex64> {
        let mut s = AlgebraSeries::zero(self.order);
        for k in 0..=self.order {
            for x in 0..self.pows[k] {
                let c = v[self.offsets[k] + x];
                if c != ZERO {
                    s.add_monomial(self.word_of(k, x), c);
                }
            }
        }
        s
    }

    pub fn from_series(&self, s: &AlgebraSeries<Complex64>) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.dim()];
        for (w, c) in s.terms() {
            if w.len() <= self.order {
                v[self.index(w)] += c;
            }
        }
        v
    }

    pub fn to_bimodule(&self, v: &[Complex64]) -> BimoduleSeries<Complex64> {
        let mut s = BimoduleSeries::zero(self.order);
        for (t, row) in self.mod_offsets.iter().enumerate() {
            for (l, &off) in row.iter().enumerate() {
                let r = t - l;
                for (li, letter) in [ModLetter::L, ModLetter::R].into_iter().enumerate() {
                    for lv in 0..self.pows[l] {
                        for rv in 0..self.pows[r] {
                            let c = v[off + li * self.pows[t] + lv * self.pows[r] + rv];
                            if c != ZERO {
                                s.add_monomial(
                                    ModWord { left: self.word_of(l, lv), letter, right: self.word_of(r, rv) },
                                    c,
                                );
                            }
                        }
                    }
                }
            }
        }
        s
    }

    /// `out += Σ_l a_l · (letter_l · w)`.
    pub fn add_letter_times(&self, a: &[Complex64], w: &[Complex64], out: &mut [Complex64]) {
        for k in 0..self.order {
            let src = self.offsets[k];
            let dst = self.offsets[k + 1];
            let n = self.pows[k];
            for (l, &al) in a.iter().enumerate() {
                if al == ZERO {
                    continue;
                }
                let base = dst + l * n;
                for x in 0..n {
                    out[base + x] += al * w[src + x];
                }
            }
        }
    }

    /// `out += Σ_l a_l · (w · letter_l)`.
    pub fn add_times_letter(&self, w: &[Complex64], a: &[Complex64], out: &mut [Complex64]) {
        let m = self.letters;
        for k in 0..self.order {
            let src = self.offsets[k];
            let dst = self.offsets[k + 1];
            for x in 0..self.pows[k] {
                let wx = w[src + x];
                if wx == ZERO {
                    continue;
                }
                for (l, &al) in a.iter().enumerate() {
                    out[dst + x * m + l] += wx * al;
                }
            }
        }
    }

    /// `out += u · (δ_L 𝓛 + δ_R 𝓡) · w`.
    pub fn add_sandwich(&self, u: &[Complex64], delta: [Complex64; 2], w: &[Complex64], out: &mut [Complex64]) {
        for (t, row) in self.mod_offsets.iter().enumerate() {
            for (l, &off) in row.iter().enumerate() {
                let r = t - l;
                let (ul, wr) = (self.offsets[l], self.offsets[r]);
                for (li, &d) in delta.iter().enumerate() {
                    if d == ZERO {
                        continue;
                    }
                    let base = off + li * self.pows[t];
                    for lv in 0..self.pows[l] {
                        let ud = u[ul + lv] * d;
                        if ud == ZERO {
                            continue;
                        }
                        let row_base = base + lv * self.pows[r];
                        for rv in 0..self.pows[r] {
                            out[row_base + rv] += ud * w[wr + rv];
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::Coeff;
    use crate::dk2::{lambda, T12, T23};

    #[test]
    fn round_trip() {
        let lay = Layout::new(3, 3);
        assert_eq!(lay.dim(), 40);
        let s = &lambda::<Complex64>(3) * &AlgebraSeries::letter(T23, 3);
        assert_eq!(lay.to_series(&lay.from_series(&s)), s);
        let m = &AlgebraSeries::<Complex64>::letter(T12, 4) * &BimoduleSeries::l(4);
        let mut v = vec![ZERO; Layout::new(3, 4).mod_dim()];
        let lay4 = Layout::new(3, 4);
        for (w, c) in m.terms() {
            v[lay4.mod_index(w)] += c;
        }
        assert_eq!(lay4.to_bimodule(&v), m);
    }

    #[test]
    fn letter_products() {
        let lay = Layout::new(3, 3);
        let x = AlgebraSeries::<Complex64>::letter(T12, 3);
        let w = &AlgebraSeries::one(3) + &lambda(3);
        let a = [Complex64::one(), ZERO, ZERO];
        let mut out = vec![ZERO; lay.dim()];
        lay.add_letter_times(&a, &lay.from_series(&w), &mut out);
        assert_eq!(lay.to_series(&out), &x * &w);
        let mut out = vec![ZERO; lay.dim()];
        lay.add_times_letter(&lay.from_series(&w), &a, &mut out);
        assert_eq!(lay.to_series(&out), &w * &x);
    }

    #[test]
    fn sandwich() {
        let lay = Layout::new(3, 4);
        let u = &AlgebraSeries::one(4) + &AlgebraSeries::letter(T12, 4);
        let w = &AlgebraSeries::one(4) + &lambda(4);
        let mut out = vec![ZERO; lay.mod_dim()];
        let d = [Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)];
        lay.add_sandwich(&lay.from_series(&u), d, &lay.from_series(&w), &mut out);
        let delta = &BimoduleSeries::l(4).scale(&d[0]) + &BimoduleSeries::r(4).scale(&d[1]);
        assert_eq!(lay.to_bimodule(&out), &(&u * &delta) * &w);
    }
}
