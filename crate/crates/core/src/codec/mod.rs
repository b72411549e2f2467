//! Packet codec: CRC-16 over the information field, a (511, 421, t = 10)
//! binary BCH code, one zero pad bit, and Gray-mapped QPSK. One packet is
//! exactly 256 unit-energy symbols.

pub mod bch;
pub mod crc;
pub mod gf;
pub mod qpsk;

use num_complex::Complex64;

use crate::model::Payload;

pub use bch::Bch;

pub const CODE_LENGTH: usize = bch::N;
pub const INFO_BITS: usize = bch::K;
pub const CORRECTABLE: usize = bch::T;
pub const CRC_BITS: usize = crc::WIDTH;
pub const PAD_BITS: usize = 1;
/// Information bits left after the CRC.
pub const DATA_BITS: usize = INFO_BITS - CRC_BITS;
/// Leading data bits that carry the user id.
pub const USER_ID_BITS: usize = 32;
pub const PAYLOAD_SYMBOLS: usize = (CODE_LENGTH + PAD_BITS) / 2;

/// Codec parameters, all fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub crc_bits: usize,
    pub pad_bits: usize,
}

impl CodecConfig {
    pub const STANDARD: CodecConfig = CodecConfig {
        n: CODE_LENGTH,
        k: INFO_BITS,
        t: CORRECTABLE,
        crc_bits: CRC_BITS,
        pad_bits: PAD_BITS,
    };

    pub fn symbols(&self) -> usize {
        (self.n + self.pad_bits) / 2
    }
}

/// A packet as it leaves the transmitter.
#[derive(Debug, Clone)]
pub struct EncodedPacket {
    pub codeword: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

pub fn encode_payload(payload: &Payload) -> EncodedPacket {
    let codeword = Bch::get()
        .encode(payload.bits())
        .expect("payload length fixed by construction");
    let mut padded = codeword.clone();
    padded.push(0);
    let symbols = qpsk::map(&padded).expect("even length");
    EncodedPacket { codeword, symbols }
}

/// Hard-sliced code bits of a payload estimate, pad bit dropped.
pub fn slice_codeword(symbols: &[Complex64]) -> Vec<u8> {
    let mut bits = qpsk::demap(symbols);
    bits.truncate(CODE_LENGTH);
    bits
}

/// Full receive chain on a payload estimate: slice, BCH decode, CRC check.
/// A packet is valid only if both the decoder and the CRC accept it.
pub fn decode_symbols(symbols: &[Complex64]) -> Option<Payload> {
    if symbols.len() != PAYLOAD_SYMBOLS {
        return None;
    }
    let info = Bch::get().decode(&slice_codeword(symbols)).ok()??;
    crc::check(&info).then(|| Payload::from_bits(info).expect("length K"))
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_consistent() {
        let c = CodecConfig::STANDARD;
        assert_eq!(c.n, (1 << 9) - 1);
        assert_eq!(c.n + c.pad_bits, 2 * PAYLOAD_SYMBOLS);
        assert_eq!(c.symbols(), 256);
        const { assert!(DATA_BITS >= USER_ID_BITS + 128) };
    }

    #[test]
    fn noiseless_chain_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for id in 0..20 {
            let p = Payload::generate(id, &mut rng);
            let e = encode_payload(&p);
            assert_eq!(e.symbols.len(), PAYLOAD_SYMBOLS);
            assert_eq!(decode_symbols(&e.symbols).unwrap(), p);
            let scaled: Vec<_> = e.symbols.iter().map(|s| s * 3.7).collect();
            assert_eq!(decode_symbols(&scaled).unwrap(), p);
        }
    }
}
