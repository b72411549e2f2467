//! Baseband model of one slot at a massive-MIMO receiver.
//!
//! Each transmitter in a slot contributes `h p` to the preamble block and
//! `h x` to the payload block, where `h` is its Rayleigh channel vector,
//! `p` its pilot-mixture preamble and `x` its QPSK payload. The receiver
//! projects the preamble block on each orthogonal pilot to estimate a
//! channel and combines the payload block with that estimate (MRC).
//!
//! Matrices are stored row-major with one row per antenna.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Rows of a Sylvester-Hadamard matrix: `N_P` mutually orthogonal ±1 pilots.
#[derive(Debug, Clone)]
pub struct PilotBook {
    n: usize,
    rows: Vec<f64>,
}

impl PilotBook {
    /// `n` must be a power of two.
    pub fn hadamard(n: usize) -> Self {
        assert!(n.is_power_of_two(), "Hadamard order must be a power of two");
        let rows = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if (i & j).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Self { n, rows }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn pilot(&self, j: usize) -> &[f64] {
        &self.rows[j * self.n..(j + 1) * self.n]
    }
}

/// Pilot-mixture preamble `(1/√p) Σ_{j ∈ subset} s_j`. Its energy is
/// always `N_P`, independent of `p`.
pub fn build_preamble(subset: &[usize], book: &PilotBook) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let scale = 1.0 / (subset.len() as f64).sqrt();
    let mut out = vec![0.0; book.len()];
    for &j in subset {
        for (o, s) in out.iter_mut().zip(book.pilot(j)) {
            *o += s;
        }
    }
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// i.i.d. CN(0, 1) channel vector of length `m`.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| complex_gaussian(rng, 1.0)).collect()
}

/// Received samples of one slot, `[P, Y]`, plus the number of
/// cancellations applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSignal {
    n_antennas: usize,
    n_pilots: usize,
    n_symbols: usize,
    /// `M × N_P`
    pub preamble_part: Vec<Complex64>,
    /// `M × N_D`
    pub payload_part: Vec<Complex64>,
    pub sic_count: usize,
}

/// One transmitter's input to a slot.
#[derive(Debug, Clone, Copy)]
pub struct Contribution<'a> {
    pub preamble: &'a [f64],
    pub symbols: &'a [Complex64],
    pub channel: &'a [Complex64],
}

impl SlotSignal {
    pub fn zeros(n_antennas: usize, n_pilots: usize, n_symbols: usize) -> Self {
        Self {
            n_antennas,
            n_pilots,
            n_symbols,
            preamble_part: vec![Complex64::default(); n_antennas * n_pilots],
            payload_part: vec![Complex64::default(); n_antennas * n_symbols],
            sic_count: 0,
        }
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_pilots(&self) -> usize {
        self.n_pilots
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    fn check(&self, c: &Contribution<'_>) -> Result<()> {
        for (expected, actual) in [
            (self.n_pilots, c.preamble.len()),
            (self.n_symbols, c.symbols.len()),
            (self.n_antennas, c.channel.len()),
        ] {
            if expected != actual {
                return Err(Error::LengthMismatch { expected, actual });
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, h: &[Complex64], preamble: &[f64], x: &[Complex64], sign: f64) {
        let (np, nd) = (self.n_pilots, self.n_symbols);
        for (m, &hm) in h.iter().enumerate() {
            let hm = hm * sign;
            for (o, &p) in self.preamble_part[m * np..(m + 1) * np]
                .iter_mut()
                .zip(preamble)
            {
                *o += hm * p;
            }
            for (o, &s) in self.payload_part[m * nd..(m + 1) * nd].iter_mut().zip(x) {
                *o += hm * s;
            }
        }
    }

    pub fn add(&mut self, c: Contribution<'_>) -> Result<()> {
        self.check(&c)?;
        self.accumulate(c.channel, c.preamble, c.symbols, 1.0);
        Ok(())
    }

    /// `P ← P − h p`, `Y ← Y − h x`, and one more cancellation counted.
    pub fn subtract(&mut self, h: &[Complex64], preamble: &[f64], x: &[Complex64]) {
        assert_eq!(h.len(), self.n_antennas);
        assert_eq!(preamble.len(), self.n_pilots);
        assert_eq!(x.len(), self.n_symbols);
        self.accumulate(h, preamble, x, -1.0);
        self.sic_count += 1;
    }

    pub fn add_noise<R: Rng + ?Sized>(&mut self, rng: &mut R, variance: f64) {
        if variance == 0.0 {
            return;
        }
        for v in self
            .preamble_part
            .iter_mut()
            .chain(self.payload_part.iter_mut())
        {
            *v += complex_gaussian(rng, variance);
        }
    }

    pub fn preamble_energy(&self) -> f64 {
        self.preamble_part.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn payload_energy(&self) -> f64 {
        self.payload_part.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Builds `P = Σ h_k p(k) + Z_p` and `Y = Σ h_k x(k) + Z` with noise of
/// the given per-entry variance.
pub fn synthesize_slot<R: Rng + ?Sized>(
    users: &[Contribution<'_>],
    n_antennas: usize,
    n_pilots: usize,
    n_symbols: usize,
    noise_variance: f64,
    rng: &mut R,
) -> Result<SlotSignal> {
    let mut slot = SlotSignal::zeros(n_antennas, n_pilots, n_symbols);
    for u in users {
        slot.add(*u)?;
    }
    slot.add_noise(rng, noise_variance);
    Ok(slot)
}

/// Matched-filter projection `φ_j = P s_jᵀ / ‖s_j‖²`.
pub fn estimate_channel_mf(slot: &SlotSignal, j: usize, book: &PilotBook) -> Vec<Complex64> {
    let s = book.pilot(j);
    let norm = s.iter().map(|v| v * v).sum::<f64>();
    slot.preamble_part
        .chunks_exact(slot.n_pilots)
        .map(|row| {
            row.iter()
                .zip(s)
                .fold(Complex64::default(), |acc, (&r, &c)| acc + r * c)
                / norm
        })
        .collect()
}

/// Maximal-ratio combining `x̂ = φᴴ Y / ‖φ‖²`; `None` for a zero estimate.
pub fn estimate_payload_mrc(slot: &SlotSignal, phi: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm: f64 = phi.iter().map(|v| v.norm_sqr()).sum();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let nd = slot.n_symbols;
    let mut out = vec![Complex64::default(); nd];
    for (row, p) in slot.payload_part.chunks_exact(nd).zip(phi) {
        let w = p.conj() / norm;
        for (o, &y) in out.iter_mut().zip(row) {
            *o += w * y;
        }
    }
    Some(out)
}

/// Least-squares channel estimate from a known payload, `ĥ = Y xᴴ / ‖x‖²`.
pub fn estimate_channel_from_payload(slot: &SlotSignal, x: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if norm == 0.0 {
        return None;
    }
    Some(
        slot.payload_part
            .chunks_exact(slot.n_symbols)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Complex64::default(), |acc, (&y, &s)| acc + y * s.conj())
                    / norm
            })
            .collect(),
    )
}
