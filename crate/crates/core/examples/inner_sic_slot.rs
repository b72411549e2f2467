//! Decodes one slot on the signal level with and without inner SIC and
//! prints the decode trace.
//!
//! cargo run --release --example inner_sic_slot

use cra_sim::phy::PilotBook;
use cra_sim::receiver::{FrameRealization, Receiver, TablePlacement};
use cra_sim::{Payload, ProtocolConfig, ReceiverMode, UserTransmission};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = ProtocolConfig::slotted(8, 32, 2).with_snr_db(6.0);
    let book = PilotBook::hadamard(cfg.n_pilots);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // A owns pilot 0, B shares pilot 1 with A and pilot 2 with C.
    let subsets: [&[usize]; 3] = [&[0, 1], &[1, 2], &[2, 3]];
    let users: Vec<UserTransmission> = subsets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let id = 10 + i as u32;
            UserTransmission {
                user_id: id,
                payload: Payload::generate(id, &mut rng),
                repetition_degree: 1,
                slot_indices: vec![0],
                pilot_subsets: vec![s.to_vec()],
            }
        })
        .collect();
    let frame = FrameRealization::new(users.clone(), &cfg, &book, 99);

    for mode in [ReceiverMode::NoSic, ReceiverMode::InnerOnly] {
        let rx = Receiver::with_resolver(mode, &book, TablePlacement::new(users.clone()));
        let out = rx.run_frame(&frame, true);
        println!("{}: resolved {:?}", mode.name(), out.resolved);
        for e in &out.trace {
            println!("  {e}");
        }
    }
}
