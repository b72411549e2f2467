//! Runs the same random frames through the signal-level receiver in every
//! mode and compares with the collision model.
//!
//! cargo run --release --example nested_sic_frame

use cra_sim::seed::trial_seed;
use cra_sim::{run_trial, Engine, ProtocolConfig, ReceiverMode, RunOptions};

fn main() -> cra_sim::Result<()> {
    let base = ProtocolConfig::framed(8, 32, 64, 2, 2).with_snr_db(10.0);
    let k_a = 48;
    let frames = 20;
    println!("{:<10} {:>10} {:>10}", "mode", "phy lost", "oracle lost");
    for mode in ReceiverMode::ALL {
        let cfg = base.clone().with_mode(mode);
        let (mut phy, mut oracle) = (0, 0);
        for t in 0..frames {
            let seed = trial_seed(2, k_a as u64, t);
            phy += run_trial(&cfg, k_a, seed, Engine::Phy, RunOptions::default(), false)?.lost;
            oracle += run_trial(&cfg, k_a, seed, Engine::CollisionOracle, RunOptions::default(), false)?.lost;
        }
        println!("{:<10} {phy:>10} {oracle:>10}", mode.name());
    }
    println!("({frames} frames of {k_a} users)");
    Ok(())
}
