//! CRC-16 (polynomial 0x1021, initial value 0xFFFF) over a bit sequence.

pub const WIDTH: usize = 16;
const POLY: u16 = 0x1021;
const INIT: u16 = 0xFFFF;

pub fn compute(bits: &[u8]) -> u16 {
    let mut reg = INIT;
    for &b in bits {
        let fb = ((reg >> 15) as u8 ^ (b & 1)) & 1;
        reg <<= 1;
        if fb == 1 {
            reg ^= POLY;
        }
    }
    reg
}

/// Appends the 16 CRC bits, most significant first.
pub fn attach(bits: &mut Vec<u8>) {
    let c = compute(bits);
    bits.extend((0..WIDTH).rev().map(|i| ((c >> i) & 1) as u8));
}

pub fn check(bits: &[u8]) -> bool {
    if bits.len() < WIDTH {
        return false;
    }
    let (data, tail) = bits.split_at(bits.len() - WIDTH);
    let expected = tail.iter().fold(0u16, |acc, &b| (acc << 1) | (b & 1) as u16);
    compute(data) == expected
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        // "123456789" under CRC-16/CCITT-FALSE is 0x29B1
        let bits: Vec<u8> = b"123456789"
            .iter()
            .flat_map(|&byte| (0..8).rev().map(move |i| (byte >> i) & 1))
            .collect();
        assert_eq!(compute(&bits), 0x29B1);
    }

    #[test]
    fn roundtrip_and_single_flip() {
        let mut bits: Vec<u8> = (0..405).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        attach(&mut bits);
        assert!(check(&bits));
        for i in 0..bits.len() {
            let mut c = bits.clone();
            c[i] ^= 1;
            assert!(!check(&c), "flip at {i} undetected");
        }
    }
}
