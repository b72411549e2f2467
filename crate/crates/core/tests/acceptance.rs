//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cra_sim::analysis::{plr_framed_nosic, plr_lower_bound, plr_slotted_nosic, BoundQuery};
use cra_sim::codec::{self, bch::Bch, CODE_LENGTH, INFO_BITS};
use cra_sim::model::{DegreeDistribution, Payload, ProtocolConfig, ReceiverMode, UserTransmission};
use cra_sim::oracle::exact_slot_nosic_loss;
use cra_sim::phy::{build_preamble, draw_channel, estimate_channel_mf, synthesize_slot, Contribution, PilotBook};
use cra_sim::receiver::{inner_sic_subtract, DecodedPacket, TxUser};
use cra_sim::seed::trial_seed;
use cra_sim::sim::{
    run_sweep, run_trial, write_csv, Engine, PlrEstimate, RunOptions, StopRule, SweepSpec, SweepVariable,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn conc(d: usize) -> DegreeDistribution {
    DegreeDistribution::concentrated(d)
}

fn fail_if(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Err(msg)
    } else {
        Ok(())
    }
}

/// Monte Carlo loss rate with a standard error from the spread of per-trial
/// loss counts, which accounts for the dependence between users of one frame.
struct McPoint {
    rate: f64,
    sd: f64,
    trials: u64,
    lost: u64,
}

/// Runs trials until at least `min_lost` users are lost (and at least
/// `min_trials` trials have run), as the sweep stop rule does.
fn mc_until(cfg: &ProtocolConfig, k: usize, engine: Engine, seed: u64, min_trials: u64, min_lost: u64) -> McPoint {
    let max_trials = 2_000_000;
    let mut counts = Vec::new();
    let mut lost = 0u64;
    let mut t = 0u64;
    while t < max_trials && (t < min_trials || lost < min_lost) {
        let o = run_trial(cfg, k, trial_seed(seed, k as u64, t), engine, RunOptions::default(), false)
            .expect("valid config");
        lost += o.lost as u64;
        counts.push(o.lost as f64);
        t += 1;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    McPoint {
        rate: mean / k as f64,
        sd: (var / n).sqrt() / k as f64,
        trials: t,
        lost,
    }
}

/// Loss events per Monte Carlo point, the default sizing of the sweep stop rule.
const MIN_LOSS_EVENTS: u64 = 100;

fn criterion_1() -> Outcome {
    let p1 = plr_lower_bound(&BoundQuery::framed(62, 128, 2, 1, 1800)).map_err(|e| e.to_string())?;
    let p2 = plr_lower_bound(&BoundQuery::framed(62, 128, 2, 2, 1800)).map_err(|e| e.to_string())?;
    let (s1, s2) = (format!("{p1:.1e}"), format!("{p2:.1e}"));
    fail_if(s1 != "5.7e-5" || s2 != "1.4e-8", format!("p=1 {p1:.3e}, p=2 {p2:.3e}"))?;
    Ok(format!("p=1 floor {s1}, p=2 floor {s2}"))
}

fn criterion_2() -> Outcome {
    let mut cases = 0;
    for np in 1..=6usize {
        for p in 1..=3usize.min(np) {
            for k in 1..=4usize {
                let exact = exact_slot_nosic_loss(np, p, k).map_err(|e| e.to_string())?;
                let formula = plr_slotted_nosic(&conc(p), np, k).map_err(|e| e.to_string())?;
                if p == 1 {
                    fail_if(
                        (exact - formula).abs() > 1e-12,
                        format!("p=1 mismatch at N_P={np} K_s={k}: {formula} vs {exact}"),
                    )?;
                }
                cases += 1;
            }
        }
    }
    let exact = exact_slot_nosic_loss(4, 2, 2).map_err(|e| e.to_string())?;
    let formula = plr_slotted_nosic(&conc(2), 4, 2).map_err(|e| e.to_string())?;
    fail_if(
        (exact - 1.0 / 6.0).abs() > 1e-12 || (formula - 0.25).abs() > 1e-12,
        format!("divergence case: formula {formula}, exact {exact}"),
    )?;

    let mut worst: (f64, String) = (0.0, String::new());
    for p in 1..=3usize {
        let cfg = ProtocolConfig::slotted(128, 8, p).with_mode(ReceiverMode::NoSic);
        for k in [8usize, 16, 32, 64, 128, 256] {
            let eq = plr_slotted_nosic(&conc(p), 128, k).map_err(|e| e.to_string())?;
            let mc = mc_until(&cfg, k, Engine::CollisionOracle, 21, 100, MIN_LOSS_EVENTS);
            let tol = (0.05 * eq).max(3.0 * mc.sd);
            let dev = (mc.rate - eq).abs();
            fail_if(
                dev > tol,
                format!("p={p} K_s={k}: formula {eq:.4e}, oracle {:.4e} ± {:.1e}", mc.rate, mc.sd),
            )?;
            if dev / tol > worst.0 {
                worst = (dev / tol, format!("p={p} K_s={k}"));
            }
        }
    }
    Ok(format!(
        "{cases} enumerated cases, p=1 exact, 1/6 vs 0.25 reproduced; full scale worst |dev|/tol = {:.2} at {}",
        worst.0, worst.1
    ))
}

fn criterion_3() -> Outcome {
    let f = |k: usize| plr_framed_nosic(&conc(2), &conc(2), 62, 128, k).expect("valid");
    let (mut lo, mut hi) = (1usize, 5000usize);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if f(mid) < 1e-3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossing = hi;
    fail_if(
        !(340..=460).contains(&crossing),
        format!("crossing at K_a = {crossing}"),
    )?;
    let cfg = ProtocolConfig::framed(62, 128, 8, 2, 2).with_mode(ReceiverMode::NoSic);
    let mut parts = Vec::new();
    for k in [200usize, 400, 800] {
        let eq = f(k);
        let mc = mc_until(&cfg, k, Engine::CollisionOracle, 31, 20, MIN_LOSS_EVENTS);
        let z = (mc.rate - eq) / mc.sd;
        fail_if(
            z.abs() > 3.0,
            format!("K_a={k}: formula {eq:.3e}, oracle {:.3e} ± {:.1e} (z = {z:.2})", mc.rate, mc.sd),
        )?;
        parts.push(format!("K_a={k} z={z:+.2} ({} lost / {} trials)", mc.lost, mc.trials));
    }
    Ok(format!("crosses 1e-3 at K_a = {crossing}; {}", parts.join(", ")))
}

fn sweep_row(cfg: ProtocolConfig, k: usize, trials: u64, engine: Engine, seed: u64) -> Result<PlrEstimate, String> {
    let spec = SweepSpec {
        base: cfg,
        sweep_variable: SweepVariable::KA,
        values: vec![k],
        trials,
        master_seed: seed,
        engine,
        stop_rule: None,
    };
    let rows = run_sweep(&spec, RunOptions::default()).map_err(|e| e.to_string())?;
    Ok(rows.into_iter().next().expect("one row"))
}

fn criterion_4() -> Outcome {
    let base = ProtocolConfig::framed(62, 128, 256, 2, 2);
    let row = |m| sweep_row(base.clone().with_mode(m), 1600, 200, Engine::CollisionOracle, 41);
    let nosic = row(ReceiverMode::NoSic)?;
    let inner = row(ReceiverMode::InnerOnly)?;
    let nested = row(ReceiverMode::Nested)?;
    fail_if(
        inner.plr > nosic.plr / 10.0 || nested.plr > inner.plr,
        format!("NoSic {:.3e}, InnerOnly {:.3e}, Nested {:.3e}", nosic.plr, inner.plr, nested.plr),
    )?;
    Ok(format!(
        "K_a=1600: NoSic {:.3e}, InnerOnly {:.3e}, Nested {:.3e} ({} trials each)",
        nosic.plr, inner.plr, nested.plr, nosic.trials
    ))
}

fn criterion_5() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(51);
    for id in 0..200 {
        let payload = Payload::generate(id, &mut r);
        let sent = codec::encode_payload(&payload);
        fail_if(
            codec::decode_symbols(&sent.symbols).as_ref() != Some(&payload),
            format!("round trip failed for user {id}"),
        )?;
    }

    let code = Bch::get();
    let patterns = 10_000;
    for i in 0..patterns {
        let info: Vec<u8> = (0..INFO_BITS).map(|_| r.random_range(0..2)).collect();
        let mut word = code.encode(&info).map_err(|e| e.to_string())?;
        for b in sample(&mut r, CODE_LENGTH, 10) {
            word[b] ^= 1;
        }
        fail_if(
            code.decode(&word).map_err(|e| e.to_string())?.as_deref() != Some(&info[..]),
            format!("weight-10 pattern {i} not corrected"),
        )?;
    }

    let book = PilotBook::hadamard(128);
    let mut worst = 0.0f64;
    for p in 1..=8 {
        for _ in 0..50 {
            let subset = sample(&mut r, 128, p).into_vec();
            let pre = build_preamble(&subset, &book).map_err(|e| e.to_string())?;
            let e: f64 = pre.iter().map(|v| v * v).sum();
            worst = worst.max((e - 128.0).abs());
        }
    }
    fail_if(worst > 1e-10, format!("preamble energy off by {worst:e}"))?;

    let cfg = ProtocolConfig::slotted(128, 32, 2).with_snr_db(f64::INFINITY);
    let trials = 1000;
    let mut ok = 0;
    for t in 0..trials {
        let o = run_trial(&cfg, 1, trial_seed(52, 1, t), Engine::Phy, RunOptions::default(), false)
            .map_err(|e| e.to_string())?;
        ok += (o.lost == 0) as u64;
    }
    fail_if(ok != trials, format!("noiseless single user decoded {ok}/{trials}"))?;
    Ok(format!(
        "round trip ok; {patterns}/{patterns} weight-10 patterns corrected; max preamble energy error {worst:.1e}; {ok}/{trials} noiseless decodes at M=32"
    ))
}

fn criterion_6() -> Outcome {
    let book = PilotBook::hadamard(16);
    let mut r = ChaCha8Rng::seed_from_u64(61);
    let user = UserTransmission {
        user_id: 9,
        payload: Payload::generate(9, &mut r),
        repetition_degree: 1,
        slot_indices: vec![0],
        pilot_subsets: vec![vec![3, 12]],
    };
    let tx = TxUser::new(user.clone(), &book);
    let h = draw_channel(&mut r, 64);
    let c = Contribution { preamble: &tx.preambles[0], symbols: &tx.packet.symbols, channel: &h };
    let slot = synthesize_slot(&[c], 64, 16, 256, 0.0, &mut r).map_err(|e| e.to_string())?;
    let phi = estimate_channel_mf(&slot, 3, &book);
    let pkt = DecodedPacket {
        payload: user.payload.clone(),
        placement: user,
        symbols: tx.packet.symbols.clone(),
        slot: 0,
        pilot: 3,
        sic_iteration: 0,
        effective_scale: 2f64.sqrt(),
    };
    let mut scaled = slot.clone();
    inner_sic_subtract(&mut scaled, &phi, &pkt, &book);
    let scaled_residual = scaled.preamble_energy() + scaled.payload_energy();

    let mut literal = slot.clone();
    literal.subtract(&phi, &tx.preambles[0], &tx.packet.symbols);
    let literal_residual = literal.preamble_energy();
    let h2: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    let predicted = 16.0 * h2 * (1.0 - 1.0 / 2f64.sqrt()).powi(2);

    let reference = slot.preamble_energy() + slot.payload_energy();
    fail_if(
        scaled_residual > 1e-24 * reference,
        format!("scaled residual {scaled_residual:e}"),
    )?;
    fail_if(
        literal_residual <= 0.0 || (literal_residual - predicted).abs() > 1e-9 * predicted,
        format!("literal residual {literal_residual} vs {predicted}"),
    )?;
    Ok(format!(
        "scaled residual {scaled_residual:.1e}; literal preamble residual {literal_residual:.4} = N_P‖h‖²(1-1/√2)²"
    ))
}

fn criterion_7() -> Outcome {
    let cfg = |p: usize| ProtocolConfig::slotted(32, 64, p).with_snr_db(10.0).with_mode(ReceiverMode::InnerOnly);
    let phy = |p: usize, k: usize, trials: u64| {
        let spec = SweepSpec {
            base: cfg(p),
            sweep_variable: SweepVariable::KS,
            values: vec![k],
            trials,
            master_seed: 71,
            engine: Engine::Phy,
            stop_rule: None,
        };
        run_sweep(&spec, RunOptions::default())
            .map_err(|e| e.to_string())
            .map(|mut rows| rows.remove(0))
    };

    // smallest K_s at which p = 1 reaches 1e-2
    let mut k_star = None;
    let mut p1_row = None;
    for k in 1..=8 {
        let row = phy(1, k, 2000)?;
        if row.plr >= 1e-2 {
            k_star = Some(k);
            p1_row = Some(row);
            break;
        }
    }
    let (k_star, p1_row) = k_star.zip(p1_row).ok_or("p=1 never reaches 1e-2 for K_s <= 8")?;
    let p2_row = phy(2, k_star, 2000)?;
    fail_if(
        p2_row.plr >= p1_row.plr,
        format!("K_s={k_star}: p=2 {:.3e} not below p=1 {:.3e}", p2_row.plr, p1_row.plr),
    )?;

    let mut high = Vec::new();
    for k in [20usize, 24] {
        let a = phy(2, k, 200)?;
        let b = phy(4, k, 200)?;
        fail_if(
            b.plr <= a.plr,
            format!("K_s={k}: p=4 {:.3e} not above p=2 {:.3e}", b.plr, a.plr),
        )?;
        high.push(format!("K_s={k}: p=2 {:.3}, p=4 {:.3}", a.plr, b.plr));
    }
    Ok(format!(
        "K_s*={k_star}: p=1 {:.3e} [{:.1e},{:.1e}], p=2 {:.3e} [{:.1e},{:.1e}]; {}",
        p1_row.plr,
        p1_row.ci_low,
        p1_row.ci_high,
        p2_row.plr,
        p2_row.ci_low,
        p2_row.ci_high,
        high.join("; ")
    ))
}

fn counts_csv(spec: &SweepSpec, workers: usize) -> Result<String, String> {
    let mut rows = run_sweep(spec, RunOptions { workers: Some(workers), genie_codec: false }).map_err(|e| e.to_string())?;
    for r in &mut rows {
        r.wall_time_s = 0.0;
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

fn criterion_8() -> Outcome {
    let specs = [
        SweepSpec {
            base: ProtocolConfig::framed(62, 128, 256, 2, 2).with_mode(ReceiverMode::InnerOnly),
            sweep_variable: SweepVariable::KA,
            values: vec![800, 1600],
            trials: 40,
            master_seed: 81,
            engine: Engine::CollisionOracle,
            stop_rule: Some(StopRule { min_loss_events: 30, max_trials: 400 }),
        },
        SweepSpec {
            base: ProtocolConfig::framed(4, 16, 16, 2, 2).with_mode(ReceiverMode::Nested),
            sweep_variable: SweepVariable::KA,
            values: vec![10, 20],
            trials: 40,
            master_seed: 82,
            engine: Engine::Phy,
            stop_rule: None,
        },
    ];
    for spec in &specs {
        let reference = counts_csv(spec, 1)?;
        for workers in [2, 3, 8] {
            fail_if(
                counts_csv(spec, workers)? != reference,
                format!("{} engine differs with {workers} workers", spec.engine.name()),
            )?;
        }
    }
    Ok("oracle (with stop rule) and PHY sweeps identical for 1, 2, 3 and 8 workers".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("collision floors at K_a=1800", criterion_1),
        ("slotted no-SIC loss vs enumeration and oracle", criterion_2),
        ("framed no-SIC crossing and oracle agreement", criterion_3),
        ("oracle mode ordering at K_a=1600", criterion_4),
        ("PHY chain unit properties", criterion_5),
        ("inner SIC scale", criterion_6),
        ("reduced-scale preamble order shape", criterion_7),
        ("determinism across worker counts", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.1}s]: {why}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
