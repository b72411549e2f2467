//! Closed-form loss rates next to exact enumeration and the collision floor.
//!
//! cargo run --release --example analytic_bounds

use cra_sim::analysis::{plr_framed_nosic, plr_lower_bound, plr_slotted_nosic, plr_slotted_nosic_exact, BoundQuery};
use cra_sim::oracle::exact_slot_nosic_loss;
use cra_sim::DegreeDistribution;

fn main() -> cra_sim::Result<()> {
    println!("slotted, N_P = 4, K_s = 2");
    for p in 1..=3 {
        let psi = DegreeDistribution::concentrated(p);
        println!(
            "  p = {p}: closed form {:.4}, inclusion-exclusion {:.4}, enumeration {:.4}",
            plr_slotted_nosic(&psi, 4, 2)?,
            plr_slotted_nosic_exact(4, p, 2)?,
            exact_slot_nosic_loss(4, p, 2)?
        );
    }

    println!("framed, N_s = 62, N_P = 128, r = p = 2");
    let two = DegreeDistribution::concentrated(2);
    for k_a in [200, 400, 800, 1200, 1800] {
        println!(
            "  K_a = {k_a:>4}: no SIC {:.3e}, floor p=1 {:.3e}, floor p=2 {:.3e}",
            plr_framed_nosic(&two, &two, 62, 128, k_a)?,
            plr_lower_bound(&BoundQuery::framed(62, 128, 2, 1, k_a))?,
            plr_lower_bound(&BoundQuery::framed(62, 128, 2, 2, k_a))?
        );
    }
    Ok(())
}
