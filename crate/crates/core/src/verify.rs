//! Self-checks behind `cra-sim verify`. Each check is small enough to run
//! in well under a second in release builds.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, BoundQuery};
use crate::codec::{self, bch::Bch, crc, CODE_LENGTH, CORRECTABLE};
use crate::model::{derive_choices, Payload, ProtocolConfig, ReceiverMode, UserTransmission};
use crate::oracle::{self, FrameGrid, GridUser};
use crate::phy::{build_preamble, draw_channel, estimate_channel_mf, synthesize_slot, Contribution, PilotBook};
use crate::receiver::{inner_sic_subtract, DecodedPacket, FrameRealization, Receiver, TablePlacement, TxUser};
use crate::sim::{run_sweep, run_trial, Engine, RunOptions, SweepSpec, SweepVariable};

type Check = fn() -> Result<(), String>;

pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.outcome.is_ok()
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Ok(()) => write!(f, "PASS {:<17} {}", self.module, self.name),
            Err(why) => write!(f, "FAIL {:<17} {}: {why}", self.module, self.name),
        }
    }
}

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

const CHECKS: &[(&str, &str, Check)] = &[
    ("core-model", "choices replay from the payload", choices_replay),
    ("core-model", "slot occupancy is uniform", slot_marginals),
    ("phy-baseband", "preamble energy equals N_P", preamble_energy),
    ("phy-baseband", "clean pilot estimate is h/sqrt(p)", clean_pilot_estimate),
    ("codec", "corrects random weight-10 patterns", bch_correction),
    ("codec", "CRC flags every single-bit flip", crc_flips),
    ("receiver-sic", "scaled cancellation is exact", scaled_cancellation),
    ("receiver-sic", "pilot chain resolved by restarts", pilot_chain),
    ("receiver-sic", "noiseless single user always decoded", single_user),
    ("collision-oracle", "enumeration matches p=1 closed form", enumeration_p1),
    ("collision-oracle", "enumeration gives 1/6 at N_P=4, p=2, K_s=2", enumeration_divergence),
    ("collision-oracle", "outer peeling frees a shadowed user", shadowed_user),
    ("analysis", "collision floor at K_a=1800", collision_floor),
    ("analysis", "framed loss reduces to slotted for one slot", one_slot_reduction),
    ("harness", "trials replay bit-identically", trial_replay),
    ("harness", "counts independent of worker count", worker_invariance),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(module, name, check)| CheckResult {
            module,
            name,
            outcome: check(),
        })
        .collect()
}

fn choices_replay() -> Result<(), String> {
    let cfg = ProtocolConfig::framed(62, 128, 8, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for id in 0..200 {
        let p = Payload::generate(id, &mut rng);
        let a = derive_choices(&p, &cfg).map_err(|e| e.to_string())?;
        let b = derive_choices(&p, &cfg).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("user {id} differs"))?;
    }
    Ok(())
}

fn slot_marginals() -> Result<(), String> {
    let cfg = ProtocolConfig::framed(8, 16, 8, 2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let users = 8000;
    let mut counts = [0f64; 8];
    for id in 0..users {
        let u = derive_choices(&Payload::generate(id, &mut rng), &cfg).map_err(|e| e.to_string())?;
        for n in u.slot_indices {
            counts[n] += 1.0;
        }
    }
    let q = 2.0 / 8.0;
    let mean = users as f64 * q;
    let sd = (users as f64 * q * (1.0 - q)).sqrt();
    ensure(counts.iter().all(|c| (c - mean).abs() < 5.0 * sd), || format!("{counts:?}"))
}

fn preamble_energy() -> Result<(), String> {
    let book = PilotBook::hadamard(16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in 1..=16 {
        let subset = sample(&mut rng, 16, p).into_vec();
        let pre = build_preamble(&subset, &book).map_err(|e| e.to_string())?;
        let e: f64 = pre.iter().map(|v| v * v).sum();
        ensure((e - 16.0).abs() < 1e-10, || format!("p={p}: {e}"))?;
    }
    Ok(())
}

fn clean_pilot_estimate() -> Result<(), String> {
    let book = PilotBook::hadamard(8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = draw_channel(&mut rng, 16);
    let pre = build_preamble(&[1, 6], &book).map_err(|e| e.to_string())?;
    let x = vec![num_complex::Complex64::new(1.0, 0.0); 256];
    let slot = synthesize_slot(
        &[Contribution { preamble: &pre, symbols: &x, channel: &h }],
        16,
        8,
        256,
        0.0,
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    let phi = estimate_channel_mf(&slot, 6, &book);
    let err: f64 = phi
        .iter()
        .zip(&h)
        .map(|(a, b)| (a - b / 2f64.sqrt()).norm())
        .fold(0.0, f64::max);
    ensure(err < 1e-12, || format!("max error {err}"))
}

fn bch_correction() -> Result<(), String> {
    let code = Bch::get();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let info: Vec<u8> = (0..codec::INFO_BITS).map(|_| rng.random_range(0..2)).collect();
        let mut word = code.encode(&info).map_err(|e| e.to_string())?;
        for i in sample(&mut rng, CODE_LENGTH, CORRECTABLE) {
            word[i] ^= 1;
        }
        let got = code.decode(&word).map_err(|e| e.to_string())?;
        ensure(got.as_deref() == Some(&info[..]), || "pattern not corrected".into())?;
    }
    Ok(())
}

fn crc_flips() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bits: Vec<u8> = (0..405).map(|_| rng.random_range(0..2)).collect();
    crc::attach(&mut bits);
    for i in 0..bits.len() {
        bits[i] ^= 1;
        let caught = !crc::check(&bits);
        bits[i] ^= 1;
        ensure(caught, || format!("flip at {i} undetected"))?;
    }
    Ok(())
}

fn hand_user(id: u32, seed: u64, placements: &[(usize, &[usize])]) -> UserTransmission {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    UserTransmission {
        user_id: id,
        payload: Payload::generate(id, &mut rng),
        repetition_degree: placements.len(),
        slot_indices: placements.iter().map(|p| p.0).collect(),
        pilot_subsets: placements.iter().map(|p| p.1.to_vec()).collect(),
    }
}

fn scaled_cancellation() -> Result<(), String> {
    let book = PilotBook::hadamard(8);
    let u = hand_user(1, 7, &[(0, &[0, 4])]);
    let tx = TxUser::new(u.clone(), &book);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = draw_channel(&mut rng, 16);
    let c = Contribution {
        preamble: &tx.preambles[0],
        symbols: &tx.packet.symbols,
        channel: &h,
    };
    let mut slot = synthesize_slot(&[c], 16, 8, 256, 0.0, &mut rng).map_err(|e| e.to_string())?;
    let phi = estimate_channel_mf(&slot, 0, &book);
    let pkt = DecodedPacket {
        payload: u.payload.clone(),
        placement: u,
        symbols: tx.packet.symbols.clone(),
        slot: 0,
        pilot: 0,
        sic_iteration: 0,
        effective_scale: 2f64.sqrt(),
    };
    let mut literal = slot.clone();
    literal.subtract(&phi, &tx.preambles[0], &tx.packet.symbols);
    inner_sic_subtract(&mut slot, &phi, &pkt, &book);
    let residual = slot.preamble_energy() + slot.payload_energy();
    ensure(residual < 1e-18, || format!("scaled residual {residual}"))?;
    ensure(literal.preamble_energy() > 1e-3, || "literal residual vanished".into())
}

fn pilot_chain() -> Result<(), String> {
    let book = PilotBook::hadamard(4);
    let users = vec![
        hand_user(10, 3, &[(0, &[0, 1])]),
        hand_user(11, 4, &[(0, &[1, 2])]),
        hand_user(12, 6, &[(0, &[2])]),
    ];
    let mut cfg = ProtocolConfig::framed(1, 4, 64, 1, 1).with_mode(ReceiverMode::InnerOnly);
    cfg.snr_db = f64::INFINITY;
    let frame = FrameRealization::new(users.clone(), &cfg, &book, 5);
    let rx = Receiver::with_resolver(ReceiverMode::InnerOnly, &book, TablePlacement::new(users));
    let got = rx.run_frame(&frame, false).resolved;
    ensure(got == BTreeSet::from([10, 11, 12]), || format!("{got:?}"))
}

fn single_user() -> Result<(), String> {
    let cfg = ProtocolConfig::slotted(16, 32, 2).with_snr_db(f64::INFINITY);
    for t in 0..100 {
        let o = run_trial(&cfg, 1, t, Engine::Phy, RunOptions::default(), false).map_err(|e| e.to_string())?;
        ensure(o.lost == 0, || format!("trial {t} lost the user"))?;
    }
    Ok(())
}

fn enumeration_p1() -> Result<(), String> {
    for np in [2usize, 4] {
        for k in 1..=4 {
            let exact = oracle::exact_slot_nosic_loss(np, 1, k).map_err(|e| e.to_string())?;
            let formula = analysis::plr_slotted_nosic_exact(np, 1, k).map_err(|e| e.to_string())?;
            ensure((exact - formula).abs() < 1e-12, || format!("N_P={np} K_s={k}"))?;
        }
    }
    Ok(())
}

fn enumeration_divergence() -> Result<(), String> {
    let exact = oracle::exact_slot_nosic_loss(4, 2, 2).map_err(|e| e.to_string())?;
    let formula =
        analysis::plr_slotted_nosic(&crate::model::DegreeDistribution::concentrated(2), 4, 2).map_err(|e| e.to_string())?;
    ensure((exact - 1.0 / 6.0).abs() < 1e-12, || format!("exact {exact}"))?;
    ensure((formula - 0.25).abs() < 1e-12, || format!("formula {formula}"))
}

fn shadowed_user() -> Result<(), String> {
    let g = |id, placements: &[(usize, &[usize])]| GridUser {
        id,
        slots: placements.iter().map(|p| p.0).collect(),
        subsets: placements.iter().map(|p| p.1.to_vec()).collect(),
    };
    // user 1 collides with 2 in slot 0 and with 3 in slot 1; 2 and 3 are
    // alone in their other slot
    let grid = FrameGrid::new(
        4,
        4,
        vec![
            g(1, &[(0, &[0]), (1, &[1])]),
            g(2, &[(0, &[0]), (2, &[0])]),
            g(3, &[(1, &[1]), (3, &[2])]),
        ],
    )
    .map_err(|e| e.to_string())?;
    let inner = oracle::peel_frame(&grid, ReceiverMode::InnerOnly);
    let nested = oracle::peel_frame(&grid, ReceiverMode::Nested);
    ensure(inner == BTreeSet::from([2, 3]), || format!("inner {inner:?}"))?;
    ensure(nested == BTreeSet::from([1, 2, 3]), || format!("nested {nested:?}"))
}

fn collision_floor() -> Result<(), String> {
    let p1 = analysis::plr_lower_bound(&BoundQuery::framed(62, 128, 2, 1, 1800)).map_err(|e| e.to_string())?;
    let p2 = analysis::plr_lower_bound(&BoundQuery::framed(62, 128, 2, 2, 1800)).map_err(|e| e.to_string())?;
    ensure(format!("{p1:.1e}") == "5.7e-5", || format!("p=1: {p1:.3e}"))?;
    ensure(format!("{p2:.1e}") == "1.4e-8", || format!("p=2: {p2:.3e}"))
}

fn one_slot_reduction() -> Result<(), String> {
    use crate::model::DegreeDistribution as D;
    for p in 1..=3 {
        for k in [2, 10, 50] {
            let f = analysis::plr_framed_nosic(&D::concentrated(1), &D::concentrated(p), 1, 64, k)
                .map_err(|e| e.to_string())?;
            let s = analysis::plr_slotted_nosic(&D::concentrated(p), 64, k).map_err(|e| e.to_string())?;
            ensure((f - s).abs() < 1e-12, || format!("p={p} k={k}: {f} vs {s}"))?;
        }
    }
    Ok(())
}

fn trial_replay() -> Result<(), String> {
    let cfg = ProtocolConfig::framed(6, 16, 16, 2, 2);
    let a = run_trial(&cfg, 20, 9, Engine::Phy, RunOptions::default(), true).map_err(|e| e.to_string())?;
    let b = run_trial(&cfg, 20, 9, Engine::Phy, RunOptions::default(), true).map_err(|e| e.to_string())?;
    ensure(a.lost == b.lost && a.trace == b.trace, || "outcomes differ".into())
}

fn worker_invariance() -> Result<(), String> {
    let spec = SweepSpec {
        base: ProtocolConfig::framed(20, 32, 8, 2, 2).with_mode(ReceiverMode::InnerOnly),
        sweep_variable: SweepVariable::KA,
        values: vec![60, 90],
        trials: 100,
        master_seed: 11,
        engine: Engine::CollisionOracle,
        stop_rule: None,
    };
    let counts = |workers| -> Result<Vec<(u64, u64, u64)>, String> {
        let rows = run_sweep(&spec, RunOptions { workers: Some(workers), genie_codec: false })
            .map_err(|e| e.to_string())?;
        Ok(rows.iter().map(|r| (r.trials, r.sent, r.lost)).collect())
    };
    let (one, three) = (counts(1)?, counts(3)?);
    ensure(one == three, || format!("{one:?} vs {three:?}"))
}
