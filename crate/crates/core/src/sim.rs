//! Monte Carlo engine: trials, sweeps, loss-rate estimates and CSV output.
//!
//! A trial is fully determined by `(config, k_active, trial_seed)`; trial
//! seeds are hashes of `(master_seed, swept value, trial index)`. Trials
//! run in fixed-size batches in index order, so results do not depend on
//! the number of worker threads.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, BoundQuery};
use crate::error::{Error, Result};
use crate::model::{derive_choices, DegreeDistribution, Payload, ProtocolConfig, ReceiverMode, UserTransmission};
use crate::oracle::{peel_frame, FrameGrid};
use crate::phy::PilotBook;
use crate::receiver::{FrameRealization, Receiver, TraceEvent};
use crate::seed::{mix, trial_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Full baseband chain with channel estimation and decoding.
    Phy,
    /// Peeling on the slot/pilot grid with ideal singleton decoding.
    CollisionOracle,
    /// Closed-form expressions, no trials.
    Analysis,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Phy => "phy",
            Engine::CollisionOracle => "oracle",
            Engine::Analysis => "analysis",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "phy" => Ok(Engine::Phy),
            "oracle" | "collision" | "collisionoracle" => Ok(Engine::CollisionOracle),
            "analysis" => Ok(Engine::Analysis),
            _ => Err(format!("unknown engine `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Active users per frame.
    KA,
    /// Active users per slot (unframed).
    KS,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::KA => "k_a",
            SweepVariable::KS => "k_s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_loss_events: u64,
    pub max_trials: u64,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ProtocolConfig,
    pub sweep_variable: SweepVariable,
    pub values: Vec<usize>,
    /// Trial count, or the minimum count when a stop rule is set.
    pub trials: u64,
    pub master_seed: u64,
    pub engine: Engine,
    pub stop_rule: Option<StopRule>,
}

/// Execution knobs that do not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Replace BCH+CRC validation by the genie test (PHY engine only).
    /// This does change results and must stay off for reference runs.
    pub genie_codec: bool,
}

/// Trials per scheduling batch; stop rules are checked between batches.
pub const BATCH: u64 = 32;

#[derive(Debug, Clone, Default)]
pub struct TrialOutcome {
    pub lost: usize,
    pub resolved: usize,
    pub trace: Vec<TraceEvent>,
}

/// One row of an output curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlrEstimate {
    pub engine: String,
    pub mode: String,
    #[serde(rename = "N_s")]
    pub n_slots: usize,
    #[serde(rename = "N_P")]
    pub n_pilots: usize,
    #[serde(rename = "M")]
    pub n_antennas: usize,
    pub r_or_lambda: String,
    pub p_or_psi: String,
    pub snr_db: f64,
    pub swept_name: String,
    pub swept_value: usize,
    pub trials: u64,
    pub sent: u64,
    pub lost: u64,
    pub plr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub wall_time_s: f64,
}

/// Human-readable distribution: `2` for `x^2`, else `0.5x^2+0.5x^3`.
pub fn describe_distribution(d: &DegreeDistribution) -> String {
    match d.concentrated_degree() {
        Some(k) => k.to_string(),
        None => d
            .iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(k, p)| format!("{p}x^{k}"))
            .collect::<Vec<_>>()
            .join("+"),
    }
}

/// 95% Wilson score interval for `lost` out of `sent`.
pub fn wilson_interval(lost: u64, sent: u64) -> (f64, f64) {
    if sent == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = sent as f64;
    let p = lost as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Draws `k` users with uniform payloads and their derived placements.
pub fn generate_users(cfg: &ProtocolConfig, k: usize, seed: u64) -> Result<Vec<UserTransmission>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x5553_4552]));
    (0..k as u32)
        .map(|id| derive_choices(&Payload::generate(id, &mut rng), cfg))
        .collect()
}

/// One frame (or one slot when unframed) with `k_active` users.
pub fn run_trial(
    cfg: &ProtocolConfig,
    k_active: usize,
    seed: u64,
    engine: Engine,
    opts: RunOptions,
    record_trace: bool,
) -> Result<TrialOutcome> {
    cfg.validate()?;
    if k_active == 0 {
        return Ok(TrialOutcome::default());
    }
    let users = generate_users(cfg, k_active, seed)?;
    let (resolved, trace) = match engine {
        Engine::CollisionOracle => {
            let grid = FrameGrid::from_transmissions(cfg.n_slots, cfg.n_pilots, &users)?;
            (peel_frame(&grid, cfg.receiver_mode), Vec::new())
        }
        Engine::Phy => {
            let book = PilotBook::hadamard(cfg.n_pilots);
            let frame = FrameRealization::new(users, cfg, &book, mix(&[seed, 0x4348_414E]));
            let rx = Receiver::new(cfg, &book);
            let out = if opts.genie_codec {
                rx.genie(&frame).run_frame(&frame, record_trace)
            } else {
                rx.run_frame(&frame, record_trace)
            };
            (out.resolved, out.trace)
        }
        Engine::Analysis => {
            return Err(Error::InvalidQuery("the analysis engine has no trials".into()));
        }
    };
    let resolved = resolved.iter().filter(|&&id| (id as usize) < k_active).count();
    Ok(TrialOutcome {
        lost: k_active - resolved,
        resolved,
        trace,
    })
}

fn row_template(cfg: &ProtocolConfig, engine: Engine, mode: &str, var: SweepVariable, value: usize) -> PlrEstimate {
    PlrEstimate {
        engine: engine.name().to_string(),
        mode: mode.to_string(),
        n_slots: cfg.n_slots,
        n_pilots: cfg.n_pilots,
        n_antennas: cfg.n_antennas,
        r_or_lambda: describe_distribution(&cfg.lambda),
        p_or_psi: describe_distribution(&cfg.psi),
        snr_db: cfg.snr_db,
        swept_name: var.name().to_string(),
        swept_value: value,
        trials: 0,
        sent: 0,
        lost: 0,
        plr: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        wall_time_s: 0.0,
    }
}

/// Mode label of unresolvable-collision floor rows.
pub const FLOOR_MODE: &str = "CollisionFloor";

/// Closed-form loss without SIC at `value` users.
pub fn nosic_value(cfg: &ProtocolConfig, value: usize) -> Result<f64> {
    if cfg.framed {
        analysis::plr_framed_nosic(&cfg.lambda, &cfg.psi, cfg.n_slots, cfg.n_pilots, value)
    } else {
        analysis::plr_slotted_nosic(&cfg.psi, cfg.n_pilots, value)
    }
}

/// Unresolvable-collision floor at `value` users; needs concentrated degrees.
pub fn floor_value(cfg: &ProtocolConfig, value: usize) -> Result<f64> {
    let p = cfg
        .psi
        .concentrated_degree()
        .ok_or_else(|| Error::InvalidQuery("collision floor needs a concentrated psi".into()))?;
    let q = if cfg.framed {
        let r = cfg
            .lambda
            .concentrated_degree()
            .ok_or_else(|| Error::InvalidQuery("collision floor needs a concentrated lambda".into()))?;
        BoundQuery::framed(cfg.n_slots, cfg.n_pilots, r, p, value)
    } else {
        BoundQuery::slotted(cfg.n_pilots, p, value)
    };
    analysis::plr_lower_bound(&q)
}

fn analysis_row(cfg: &ProtocolConfig, var: SweepVariable, value: usize, floor: bool) -> Result<PlrEstimate> {
    let start = Instant::now();
    let (mode, plr) = if floor {
        (FLOOR_MODE, floor_value(cfg, value)?)
    } else {
        (ReceiverMode::NoSic.name(), nosic_value(cfg, value)?)
    };
    let mut row = row_template(cfg, Engine::Analysis, mode, var, value);
    row.plr = plr;
    row.ci_low = plr;
    row.ci_high = plr;
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(row)
}

/// Both closed-form rows (no-SIC approximation, collision floor) at each value.
/// The floor row is omitted for irregular distributions.
pub fn bounds_rows(cfg: &ProtocolConfig, var: SweepVariable, values: &[usize]) -> Result<Vec<PlrEstimate>> {
    cfg.validate()?;
    let concentrated = cfg.psi.concentrated_degree().is_some() && cfg.lambda.concentrated_degree().is_some();
    let mut rows = Vec::new();
    for &v in values {
        rows.push(analysis_row(cfg, var, v, false)?);
        if concentrated {
            rows.push(analysis_row(cfg, var, v, true)?);
        }
    }
    Ok(rows)
}

fn run_point(spec: &SweepSpec, value: usize, opts: RunOptions) -> Result<PlrEstimate> {
    let start = Instant::now();
    let cfg = &spec.base;
    let cap = spec.stop_rule.map_or(spec.trials, |s| s.max_trials.max(spec.trials));
    let (mut done, mut lost, mut sent) = (0u64, 0u64, 0u64);
    while done < cap {
        let end = (done + BATCH).min(cap);
        let outcomes: Vec<Result<TrialOutcome>> = (done..end)
            .into_par_iter()
            .map(|t| {
                run_trial(
                    cfg,
                    value,
                    trial_seed(spec.master_seed, value as u64, t),
                    spec.engine,
                    opts,
                    false,
                )
            })
            .collect();
        for o in outcomes {
            let o = o?;
            lost += o.lost as u64;
            sent += (o.lost + o.resolved) as u64;
        }
        done = end;
        if let Some(rule) = spec.stop_rule {
            if done >= spec.trials && lost >= rule.min_loss_events {
                break;
            }
        }
    }
    let mut row = row_template(cfg, spec.engine, cfg.receiver_mode.name(), spec.sweep_variable, value);
    row.trials = done;
    row.sent = sent;
    row.lost = lost;
    row.plr = if sent == 0 { 0.0 } else { lost as f64 / sent as f64 };
    (row.ci_low, row.ci_high) = wilson_interval(lost, sent);
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(row)
}

/// One estimate per swept value.
pub fn run_sweep(spec: &SweepSpec, opts: RunOptions) -> Result<Vec<PlrEstimate>> {
    spec.base.validate()?;
    if spec.values.is_empty() || spec.trials == 0 {
        return Err(Error::InvalidQuery("sweep needs values and at least one trial".into()));
    }
    let body = || -> Result<Vec<PlrEstimate>> {
        spec.values
            .iter()
            .map(|&v| match spec.engine {
                Engine::Analysis => analysis_row(
                    &spec.base,
                    spec.sweep_variable,
                    v,
                    spec.base.receiver_mode != ReceiverMode::NoSic,
                ),
                _ => run_point(spec, v, opts),
            })
            .collect()
    };
    match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidQuery(e.to_string()))?
            .install(body),
        None => body(),
    }
}

pub fn write_csv<W: Write>(rows: &[PlrEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `name=start:stop:step` (inclusive stop).
pub fn parse_sweep(text: &str) -> Result<(SweepVariable, Vec<usize>)> {
    let bad = || Error::InvalidQuery(format!("bad sweep `{text}`, expected k_a=start:stop:step"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let var = match name.trim() {
        "k_a" => SweepVariable::KA,
        "k_s" => SweepVariable::KS,
        _ => return Err(bad()),
    };
    let parts: Vec<usize> = range
        .split(':')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, stop, step) = match parts[..] {
        [v] => (v, v, 1),
        [a, b] => (a, b, 1),
        [a, b, c] if c > 0 => (a, b, c),
        _ => return Err(bad()),
    };
    if stop < start {
        return Err(bad());
    }
    Ok((var, (start..=stop).step_by(step).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_users_trial() {
        let cfg = ProtocolConfig::framed(4, 8, 8, 2, 1);
        let o = run_trial(&cfg, 0, 1, Engine::Phy, RunOptions::default(), false).unwrap();
        assert_eq!((o.lost, o.resolved), (0, 0));
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = ProtocolConfig::framed(4, 8, 16, 2, 2).with_mode(ReceiverMode::Nested);
        let a = run_trial(&cfg, 12, 77, Engine::Phy, RunOptions::default(), true).unwrap();
        let b = run_trial(&cfg, 12, 77, Engine::Phy, RunOptions::default(), true).unwrap();
        assert_eq!((a.lost, a.resolved), (b.lost, b.resolved));
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn wilson_brackets_estimate() {
        for (l, n) in [(0, 10), (5, 10), (10, 10), (3, 100_000)] {
            let (lo, hi) = wilson_interval(l, n);
            let p = l as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn sweep_parsing() {
        let (v, vals) = parse_sweep("k_a=100:400:100").unwrap();
        assert_eq!(v, SweepVariable::KA);
        assert_eq!(vals, vec![100, 200, 300, 400]);
        assert_eq!(parse_sweep("k_s=5").unwrap().1, vec![5]);
        assert!(parse_sweep("k_x=1:2").is_err());
        assert!(parse_sweep("k_a=5:1").is_err());
    }

    #[test]
    fn single_trial_row_counts() {
        let spec = SweepSpec {
            base: ProtocolConfig::framed(10, 16, 8, 2, 2).with_mode(ReceiverMode::InnerOnly),
            sweep_variable: SweepVariable::KA,
            values: vec![20],
            trials: 1,
            master_seed: 3,
            engine: Engine::CollisionOracle,
            stop_rule: None,
        };
        let rows = run_sweep(&spec, RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].trials, 1);
        assert_eq!(rows[0].sent, 20);
        assert!(rows[0].lost <= 20);
    }

    #[test]
    fn analysis_engine_consumes_no_trials() {
        let spec = SweepSpec {
            base: ProtocolConfig::framed(62, 128, 256, 2, 2).with_mode(ReceiverMode::NoSic),
            sweep_variable: SweepVariable::KA,
            values: vec![400, 800],
            trials: 1,
            master_seed: 0,
            engine: Engine::Analysis,
            stop_rule: None,
        };
        let rows = run_sweep(&spec, RunOptions::default()).unwrap();
        for r in &rows {
            assert_eq!(r.trials, 0);
            let v = nosic_value(&spec.base, r.swept_value).unwrap();
            assert_eq!(r.plr, v);
        }
    }

    #[test]
    fn describe() {
        assert_eq!(describe_distribution(&DegreeDistribution::concentrated(2)), "2");
        let d = DegreeDistribution::new([(2, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(describe_distribution(&d), "0.5x^2+0.5x^3");
    }
}
