//! Encodes a payload, corrupts the codeword and decodes it again.
//!
//! cargo run --release --example bch_codec

use cra_sim::codec::{self, Bch, CORRECTABLE};
use cra_sim::Payload;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cra_sim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let payload = Payload::generate(42, &mut rng);
    let packet = codec::encode_payload(&payload);
    println!(
        "user {} -> {} code bits, {} QPSK symbols, CRC ok: {}",
        payload.user_id(),
        packet.codeword.len(),
        packet.symbols.len(),
        payload.crc_ok()
    );

    let code = Bch::get();
    for flips in [0, 5, CORRECTABLE, CORRECTABLE + 1, CORRECTABLE + 3] {
        let mut word = packet.codeword.clone();
        for i in sample(&mut rng, word.len(), flips) {
            word[i] ^= 1;
        }
        let verdict = match code.decode(&word)? {
            Some(info) if info == payload.bits() => "recovered".to_string(),
            Some(info) => match Payload::from_bits(info) {
                Ok(p) if p.crc_ok() => "miscorrected, CRC passed".into(),
                _ => "miscorrected, CRC rejected".into(),
            },
            None => "decoding failure".into(),
        };
        println!("{flips:>2} bit errors: {verdict}");
    }

    let decoded = codec::decode_symbols(&packet.symbols);
    println!("symbol-level round trip: {}", decoded.as_ref() == Some(&payload));
    Ok(())
}
