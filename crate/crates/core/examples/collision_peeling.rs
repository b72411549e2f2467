//! Peels a small hand-made frame under every receiver mode on the
//! collision model, then reuses a random frame of the full-size layout.
//!
//! cargo run --release --example collision_peeling

use cra_sim::oracle::{peel_frame, FrameGrid, GridUser};
use cra_sim::sim::generate_users;
use cra_sim::{ProtocolConfig, ReceiverMode};

fn user(id: u32, placements: &[(usize, &[usize])]) -> GridUser {
    GridUser {
        id,
        slots: placements.iter().map(|p| p.0).collect(),
        subsets: placements.iter().map(|p| p.1.to_vec()).collect(),
    }
}

fn main() -> cra_sim::Result<()> {
    // Slot 0 chains A{0,1}, B{1,2}, C{2,3}; D and C meet again in slot 1.
    let grid = FrameGrid::new(
        2,
        4,
        vec![
            user(1, &[(0, &[0, 1])]),
            user(2, &[(0, &[1, 2])]),
            user(3, &[(0, &[2, 3]), (1, &[0, 1])]),
            user(4, &[(1, &[1, 2])]),
        ],
    )?;
    print!("{}", grid.to_text());
    for mode in ReceiverMode::ALL {
        println!("{:<10} resolves {:?}", mode.name(), peel_frame(&grid, mode));
    }

    let cfg = ProtocolConfig::framed(62, 128, 256, 2, 2);
    let users = generate_users(&cfg, 1600, 5)?;
    let grid = FrameGrid::from_transmissions(cfg.n_slots, cfg.n_pilots, &users)?;
    for mode in ReceiverMode::ALL {
        let lost = users.len() - peel_frame(&grid, mode).len();
        println!("K_a = 1600, {:<10} lost {lost}", mode.name());
    }
    Ok(())
}
