//! Narrow-sense binary BCH code of length 511 correcting 10 errors.
//!
//! Codewords are stored one bit per byte, highest-degree coefficient
//! first: `c[i]` is the coefficient of `x^(510 - i)`. Encoding is
//! systematic, so the 421 information bits occupy `c[0..421]`.
//!
//! Decoding is bounded-distance: syndromes, Berlekamp-Massey for the
//! error locator, then a Chien search for its roots.

use std::sync::OnceLock;

use super::gf::{Gf512, ORDER};
use crate::error::{Error, Result};

pub const N: usize = 511;
pub const K: usize = 421;
pub const T: usize = 10;
const PARITY: usize = N - K; // 90

pub struct Bch {
    /// Generator polynomial, bit `d` = coefficient of `x^d`.
    generator: u128,
}

fn cyclotomic_coset(start: usize) -> Vec<usize> {
    let mut coset = vec![start];
    let mut e = (start * 2) % ORDER;
    while e != start {
        coset.push(e);
        e = (e * 2) % ORDER;
    }
    coset
}

/// Minimal polynomial of `α^start` over GF(2), as a bit mask.
fn minimal_polynomial(f: &Gf512, start: usize) -> u128 {
    // product of (x + α^c) over the coset, coefficients in GF(2^9)
    let mut poly: Vec<u16> = vec![1];
    for c in cyclotomic_coset(start) {
        let root = f.alpha_pow(c);
        let mut next = vec![0u16; poly.len() + 1];
        for (d, &a) in poly.iter().enumerate() {
            next[d + 1] ^= a;
            next[d] ^= f.mul(a, root);
        }
        poly = next;
    }
    poly.iter().enumerate().fold(0u128, |acc, (d, &a)| {
        debug_assert!(a <= 1, "minimal polynomial must be binary");
        acc | ((a as u128) << d)
    })
}

fn gf2_poly_mul(a: u128, b: u128) -> u128 {
    let mut out = 0u128;
    for d in 0..128 {
        if (b >> d) & 1 == 1 {
            out ^= a << d;
        }
    }
    out
}

fn degree(p: u128) -> usize {
    127 - p.leading_zeros() as usize
}

impl Bch {
    fn build() -> Self {
        let f = Gf512::get();
        let mut covered = vec![false; ORDER];
        let mut generator: u128 = 1;
        for i in (1..2 * T).step_by(2) {
            if covered[i] {
                continue;
            }
            for c in cyclotomic_coset(i) {
                covered[c] = true;
            }
            generator = gf2_poly_mul(generator, minimal_polynomial(f, i));
        }
        assert_eq!(degree(generator), PARITY);
        Self { generator }
    }

    pub fn get() -> &'static Bch {
        static CODE: OnceLock<Bch> = OnceLock::new();
        CODE.get_or_init(Bch::build)
    }

    pub fn generator(&self) -> u128 {
        self.generator
    }

    pub fn generator_degree(&self) -> usize {
        degree(self.generator)
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != K {
            return Err(Error::LengthMismatch {
                expected: K,
                actual: info.len(),
            });
        }
        let mask = (1u128 << PARITY) - 1;
        let low = self.generator & mask;
        let mut reg = 0u128;
        for &b in info {
            let fb = (b as u128 & 1) ^ ((reg >> (PARITY - 1)) & 1);
            reg = (reg << 1) & mask;
            if fb == 1 {
                reg ^= low;
            }
        }
        let mut cw = Vec::with_capacity(N);
        cw.extend(info.iter().map(|b| b & 1));
        cw.extend((0..PARITY).map(|i| ((reg >> (PARITY - 1 - i)) & 1) as u8));
        Ok(cw)
    }

    /// Syndromes `S_1..S_2t` (index 0 holds `S_1`).
    fn syndromes(&self, word: &[u8]) -> [u16; 2 * T] {
        let f = Gf512::get();
        let mut s = [0u16; 2 * T];
        let exps: Vec<usize> = word
            .iter()
            .enumerate()
            .filter(|(_, &b)| b & 1 == 1)
            .map(|(k, _)| N - 1 - k)
            .collect();
        for i in (1..=2 * T).step_by(2) {
            let mut acc = 0u16;
            for &e in &exps {
                acc ^= f.alpha_pow(i * e);
            }
            s[i - 1] = acc;
        }
        // S_2i = S_i^2 over GF(2)
        for i in (2..=2 * T).step_by(2) {
            let h = s[i / 2 - 1];
            s[i - 1] = f.mul(h, h);
        }
        s
    }

    /// Error-locator polynomial, lowest degree first.
    fn berlekamp_massey(s: &[u16; 2 * T]) -> Vec<u16> {
        let f = Gf512::get();
        let mut c = vec![0u16; 2 * T + 1];
        let mut b = vec![0u16; 2 * T + 1];
        c[0] = 1;
        b[0] = 1;
        let mut l = 0usize;
        let mut m = 1usize;
        let mut bb = 1u16;
        for n in 0..2 * T {
            let mut d = s[n];
            for i in 1..=l {
                d ^= f.mul(c[i], s[n - i]);
            }
            if d == 0 {
                m += 1;
                continue;
            }
            let coef = f.div(d, bb);
            if 2 * l <= n {
                let prev = c.clone();
                for i in 0..=2 * T - m {
                    c[i + m] ^= f.mul(coef, b[i]);
                }
                l = n + 1 - l;
                b = prev;
                bb = d;
                m = 1;
            } else {
                for i in 0..=2 * T - m {
                    c[i + m] ^= f.mul(coef, b[i]);
                }
                m += 1;
            }
        }
        c.truncate(l + 1);
        c
    }

    /// Corrects up to `T` bit errors; `None` when the syndrome is not
    /// consistent with any error pattern of weight at most `T`.
    pub fn decode_codeword(&self, received: &[u8]) -> Result<Option<Vec<u8>>> {
        if received.len() != N {
            return Err(Error::LengthMismatch {
                expected: N,
                actual: received.len(),
            });
        }
        let s = self.syndromes(received);
        let mut word: Vec<u8> = received.iter().map(|b| b & 1).collect();
        if s.iter().all(|&x| x == 0) {
            return Ok(Some(word));
        }
        let locator = Self::berlekamp_massey(&s);
        let nu = locator.len() - 1;
        if nu == 0 || nu > T {
            return Ok(None);
        }
        // Chien search: error at exponent e iff Λ(α^{-e}) = 0
        let f = Gf512::get();
        let logs: Vec<Option<usize>> = locator
            .iter()
            .map(|&c| (c != 0).then(|| f.log(c)))
            .collect();
        let mut found = 0;
        for e in 0..N {
            let inv = (ORDER - e) % ORDER;
            let mut acc = 0u16;
            for (d, lg) in logs.iter().enumerate() {
                if let Some(lg) = lg {
                    acc ^= f.alpha_pow(lg + d * inv);
                }
            }
            if acc == 0 {
                word[N - 1 - e] ^= 1;
                found += 1;
            }
        }
        if found != nu {
            return Ok(None);
        }
        Ok(Some(word))
    }

    /// Returns the information bits of the corrected codeword.
    pub fn decode(&self, received: &[u8]) -> Result<Option<Vec<u8>>> {
        Ok(self.decode_codeword(received)?.map(|mut w| {
            w.truncate(K);
            w
        }))
    }

    /// Syndrome test only.
    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == N && self.syndromes(word).iter().all(|&x| x == 0)
    }
}
