//! The same sweep on different worker counts yields identical counts.
//!
//! cargo run --release --example deterministic_sweep

use cra_sim::{run_sweep, Engine, ProtocolConfig, ReceiverMode, RunOptions, SweepSpec, SweepVariable};

fn main() -> cra_sim::Result<()> {
    let spec = SweepSpec {
        base: ProtocolConfig::slotted(32, 64, 2).with_snr_db(10.0).with_mode(ReceiverMode::InnerOnly),
        sweep_variable: SweepVariable::KS,
        values: vec![4, 8, 12],
        trials: 30,
        master_seed: 9,
        engine: Engine::Phy,
        stop_rule: None,
    };
    for workers in [1, 2, 4] {
        let rows = run_sweep(&spec, RunOptions { workers: Some(workers), genie_codec: false })?;
        let counts: Vec<(usize, u64)> = rows.iter().map(|r| (r.swept_value, r.lost)).collect();
        println!("workers = {workers}: lost per K_s {counts:?}");
    }
    Ok(())
}
