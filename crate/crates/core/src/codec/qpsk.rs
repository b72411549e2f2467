//! Gray-mapped QPSK: bit pair `(b0, b1)` goes to `((1 - 2 b0) + i (1 - 2 b1)) / √2`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::LengthMismatch {
            expected: bits.len() + 1,
            actual: bits.len(),
        });
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    Ok(bits
        .chunks_exact(2)
        .map(|p| {
            Complex64::new(
                a * (1.0 - 2.0 * (p[0] & 1) as f64),
                a * (1.0 - 2.0 * (p[1] & 1) as f64),
            )
        })
        .collect())
}

/// Sign-based hard decisions.
pub fn demap(symbols: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * symbols.len());
    for s in symbols {
        out.push((s.re < 0.0) as u8);
        out.push((s.im < 0.0) as u8);
    }
    out
}
