//! A loss-rate sweep with the loss-event stop rule, written as CSV.
//!
//! cargo run --release --example plr_sweep

use std::io;

use cra_sim::sim::write_csv;
use cra_sim::{run_sweep, Engine, ProtocolConfig, ReceiverMode, RunOptions, StopRule, SweepSpec, SweepVariable};

fn main() -> cra_sim::Result<()> {
    let mut rows = Vec::new();
    for mode in [ReceiverMode::NoSic, ReceiverMode::InnerOnly, ReceiverMode::Nested] {
        let spec = SweepSpec {
            base: ProtocolConfig::framed(62, 128, 256, 2, 2).with_mode(mode),
            sweep_variable: SweepVariable::KA,
            values: vec![800, 1200, 1600],
            trials: 20,
            master_seed: 1,
            engine: Engine::CollisionOracle,
            stop_rule: Some(StopRule { min_loss_events: 100, max_trials: 300 }),
        };
        rows.extend(run_sweep(&spec, RunOptions::default())?);
    }
    write_csv(&rows, io::stdout().lock())
}
