//! Builds pilot-mixture preambles from a Hadamard book and shows what the
//! matched filter sees on a clean pilot and on a pilot shared by two users.
//!
//! cargo run --release --example pilot_mixture

use cra_sim::phy::{build_preamble, draw_channel, estimate_channel_mf, synthesize_slot, Contribution, PilotBook};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mse(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64
}

fn main() -> cra_sim::Result<()> {
    let (n_pilots, m, n_d) = (16, 64, 8);
    let book = PilotBook::hadamard(n_pilots);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let a_subset = [1, 5];
    let b_subset = [5, 9];
    let a = build_preamble(&a_subset, &book)?;
    let b = build_preamble(&b_subset, &book)?;
    let energy: f64 = a.iter().map(|v| v * v).sum();
    println!("preamble energy {energy:.6} (N_P = {n_pilots})");

    let (ha, hb) = (draw_channel(&mut rng, m), draw_channel(&mut rng, m));
    let x = vec![Complex64::new(1.0, 0.0); n_d];
    let slot = synthesize_slot(
        &[
            Contribution { preamble: &a, symbols: &x, channel: &ha },
            Contribution { preamble: &b, symbols: &x, channel: &hb },
        ],
        m,
        n_pilots,
        n_d,
        0.0,
        &mut rng,
    )?;

    let target: Vec<Complex64> = ha.iter().map(|h| h / 2f64.sqrt()).collect();
    for j in [1, 5, 9] {
        let phi = estimate_channel_mf(&slot, j, &book);
        println!("pilot {j}: mean squared distance to h_A/sqrt(2) = {:.4}", mse(&phi, &target));
    }
    println!("pilot 1 is clean for user A; pilot 5 also carries user B");
    Ok(())
}
