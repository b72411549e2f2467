//! Arithmetic in GF(2^9) via log/antilog tables.

use std::sync::OnceLock;

pub const M: usize = 9;
pub const ORDER: usize = (1 << M) - 1; // 511

/// x^9 + x^4 + 1
const PRIMITIVE_POLY: u16 = 0x211;

pub struct Gf512 {
    /// exp[i] = α^i, doubled so that exp[a + b] never needs a reduction.
    exp: [u16; 2 * ORDER],
    log: [u16; ORDER + 1],
}

impl Gf512 {
    fn build() -> Self {
        let mut exp = [0u16; 2 * ORDER];
        let mut log = [0u16; ORDER + 1];
        let mut x: u16 = 1;
        for i in 0..ORDER {
            exp[i] = x;
            exp[i + ORDER] = x;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << M) != 0 {
                x ^= PRIMITIVE_POLY;
            }
        }
        Self { exp, log }
    }

    pub fn get() -> &'static Gf512 {
        static FIELD: OnceLock<Gf512> = OnceLock::new();
        FIELD.get_or_init(Gf512::build)
    }

    #[inline]
    pub fn alpha_pow(&self, e: usize) -> u16 {
        self.exp[e % ORDER]
    }

    #[inline]
    pub fn log(&self, a: u16) -> usize {
        debug_assert!(a != 0);
        self.log[a as usize] as usize
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        debug_assert!(a != 0);
        self.exp[ORDER - self.log[a as usize] as usize]
    }

    #[inline]
    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_generates_whole_group() {
        let f = Gf512::get();
        let mut seen = vec![false; ORDER + 1];
        for i in 0..ORDER {
            let a = f.alpha_pow(i);
            assert!(a != 0 && !seen[a as usize]);
            seen[a as usize] = true;
        }
    }

    #[test]
    fn inverse_and_distributivity() {
        let f = Gf512::get();
        for a in 1..=ORDER as u16 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
            let b = (a * 37) % 512;
            let c = (a * 101 + 3) % 512;
            assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
        }
    }
}
