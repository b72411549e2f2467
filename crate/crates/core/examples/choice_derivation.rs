//! Shows that slot and pilot choices are a pure function of the payload,
//! so a receiver can replay them after one successful decode.
//!
//! cargo run --release --example choice_derivation

use cra_sim::{derive_choices, DegreeDistribution, Payload, ProtocolConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cra_sim::Result<()> {
    let mut cfg = ProtocolConfig::framed(62, 128, 256, 2, 2);
    cfg.lambda = DegreeDistribution::new([(2, 0.5), (3, 0.5)])?;
    cfg.psi = DegreeDistribution::new([(1, 0.25), (2, 0.75)])?;
    cfg.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for id in 0..5 {
        let payload = Payload::generate(id, &mut rng);
        let tx = derive_choices(&payload, &cfg)?;
        let replay = derive_choices(&payload, &cfg)?;
        assert_eq!(tx, replay);
        let placements: Vec<String> = tx
            .placements()
            .map(|(slot, subset)| format!("slot {slot} pilots {subset:?}"))
            .collect();
        println!("user {id}: r = {}, {}", tx.repetition_degree, placements.join("; "));
    }
    Ok(())
}
