//! Randomized invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cra_sim::codec::{self, CODE_LENGTH, CORRECTABLE};
use cra_sim::model::{derive_choices, DegreeDistribution, Payload, ProtocolConfig};
use cra_sim::oracle::{FrameGrid, GridUser};
use cra_sim::phy::{build_preamble, PilotBook};

fn config(n_slots: usize, log_pilots: u32, r: usize, p: usize) -> ProtocolConfig {
    let n_pilots = 1usize << log_pilots;
    ProtocolConfig::framed(n_slots, n_pilots, 4, r.min(n_slots), p.min(n_pilots))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn choices_are_well_formed(
        seed in any::<u64>(),
        n_slots in 1usize..80,
        log_pilots in 0u32..8,
        r in 1usize..5,
        p in 1usize..5,
    ) {
        let cfg = config(n_slots, log_pilots, r, p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payload = Payload::generate(7, &mut rng);
        let u = derive_choices(&payload, &cfg).unwrap();
        prop_assert_eq!(u.repetition_degree, cfg.lambda.concentrated_degree().unwrap());
        prop_assert!(u.slot_indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(u.slot_indices.iter().all(|&s| s < n_slots));
        for s in &u.pilot_subsets {
            prop_assert_eq!(s.len(), cfg.psi.concentrated_degree().unwrap());
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.iter().all(|&j| j < cfg.n_pilots));
        }
        prop_assert_eq!(derive_choices(&payload, &cfg).unwrap(), u);
    }

    #[test]
    fn irregular_degrees_stay_in_support(seed in any::<u64>(), w in 0.05f64..0.95) {
        let mut cfg = ProtocolConfig::framed(30, 64, 4, 2, 2);
        cfg.lambda = DegreeDistribution::new([(2, w), (5, 1.0 - w)]).unwrap();
        cfg.psi = DegreeDistribution::new([(1, 1.0 - w), (3, w)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = derive_choices(&Payload::generate(1, &mut rng), &cfg).unwrap();
        prop_assert!(u.repetition_degree == 2 || u.repetition_degree == 5);
        prop_assert!(u.pilot_subsets.iter().all(|s| s.len() == 1 || s.len() == 3));
    }

    #[test]
    fn codec_roundtrips_through_correctable_errors(
        seed in any::<u64>(),
        flips in proptest::collection::btree_set(0usize..CODE_LENGTH, 0..=CORRECTABLE),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payload = Payload::generate(3, &mut rng);
        let mut symbols = codec::encode_payload(&payload).symbols;
        for i in flips {
            let s = &mut symbols[i / 2];
            if i % 2 == 0 { s.re = -s.re } else { s.im = -s.im }
        }
        prop_assert_eq!(codec::decode_symbols(&symbols), Some(payload));
    }

    #[test]
    fn preamble_energy_is_pilot_length(log_pilots in 0u32..8, picks in proptest::collection::btree_set(0usize..128, 1..10)) {
        let n = 1usize << log_pilots;
        let subset: Vec<usize> = picks.into_iter().filter(|&j| j < n).collect();
        prop_assume!(!subset.is_empty());
        let book = PilotBook::hadamard(n);
        let pre = build_preamble(&subset, &book).unwrap();
        let e: f64 = pre.iter().map(|v| v * v).sum();
        prop_assert!((e - n as f64).abs() < 1e-9);
    }

    #[test]
    fn grid_text_roundtrip(seed in any::<u64>(), users in 1usize..20) {
        let cfg = ProtocolConfig::framed(8, 16, 4, 2, 2);
        let tx = cra_sim::sim::generate_users(&cfg, users, seed).unwrap();
        let grid = FrameGrid::from_transmissions(8, 16, &tx).unwrap();
        let back = FrameGrid::from_text(&grid.to_text()).unwrap();
        let a: Vec<GridUser> = grid.users().to_vec();
        prop_assert_eq!(a, back.users().to_vec());
    }
}
