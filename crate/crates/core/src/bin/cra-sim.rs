use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cra_sim::model::DegreeDistribution;
use cra_sim::sim::{self, parse_sweep, write_csv, Engine, RunOptions, StopRule, SweepSpec};
use cra_sim::{verify, Error, ProtocolConfig, ReceiverMode};

#[derive(Parser)]
#[command(name = "cra-sim", version, about = "Coded random access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo loss-rate sweep.
    Simulate(SimulateArgs),
    /// Closed-form loss rates over a sweep.
    Bounds(BoundsArgs),
    /// Built-in self-checks, one line per check.
    Verify,
    /// Decode log of a single frame.
    Trace(TraceArgs),
}

#[derive(Args)]
struct Common {
    /// Protocol configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured receiver mode.
    #[arg(long)]
    mode: Option<ReceiverMode>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "oracle")]
    engine: Engine,
    /// `k_a=start:stop:step` or `k_s=...`.
    #[arg(long)]
    sweep: String,
    /// Trials per point (the minimum when --min-loss-events is set).
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep adding trials until this many users are lost.
    #[arg(long)]
    min_loss_events: Option<u64>,
    /// Upper limit on trials under --min-loss-events.
    #[arg(long, default_value_t = 1_000_000)]
    max_trials: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Approximate validity test instead of BCH+CRC decoding.
    #[arg(long)]
    genie_codec: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    sweep: String,
    /// Comma-separated preamble orders, each replacing psi. Defaults to
    /// 1..=p for a concentrated psi = x^p.
    #[arg(long, value_delimiter = ',')]
    orders: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "phy")]
    engine: Engine,
    /// Active users in the frame.
    #[arg(long)]
    users: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

fn load(common: &Common) -> cra_sim::Result<ProtocolConfig> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = ProtocolConfig::from_json(&text)?;
    if let Some(mode) = common.mode {
        cfg.receiver_mode = mode;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(a: SimulateArgs) -> cra_sim::Result<()> {
    let base = load(&a.common)?;
    let (sweep_variable, values) = parse_sweep(&a.sweep)?;
    let spec = SweepSpec {
        base,
        sweep_variable,
        values,
        trials: a.trials,
        master_seed: a.seed,
        engine: a.engine,
        stop_rule: a.min_loss_events.map(|min_loss_events| StopRule {
            min_loss_events,
            max_trials: a.max_trials,
        }),
    };
    let opts = RunOptions {
        workers: a.workers,
        genie_codec: a.genie_codec,
    };
    let rows = sim::run_sweep(&spec, opts)?;
    write_csv(&rows, output(a.out.as_deref())?)
}

fn bounds(a: BoundsArgs) -> cra_sim::Result<()> {
    let base = load(&a.common)?;
    let (var, values) = parse_sweep(&a.sweep)?;
    let orders = match (a.orders.is_empty(), base.psi.concentrated_degree()) {
        (false, _) => a.orders,
        (true, Some(p)) => (1..=p).collect(),
        (true, None) => Vec::new(),
    };
    let mut rows = Vec::new();
    if orders.is_empty() {
        rows = sim::bounds_rows(&base, var, &values)?;
    } else {
        for p in orders {
            let cfg = ProtocolConfig {
                psi: DegreeDistribution::concentrated(p),
                ..base.clone()
            };
            rows.extend(sim::bounds_rows(&cfg, var, &values)?);
        }
    }
    write_csv(&rows, output(a.out.as_deref())?)
}

fn trace(a: TraceArgs) -> cra_sim::Result<()> {
    let cfg = load(&a.common)?;
    let seed = cra_sim::seed::trial_seed(a.seed, a.users as u64, a.trial);
    let outcome = sim::run_trial(&cfg, a.users, seed, a.engine, RunOptions::default(), true)?;
    let mut out = io::stdout().lock();
    for e in &outcome.trace {
        writeln!(out, "trial={} {e}", a.trial)?;
    }
    writeln!(
        out,
        "# trial={} users={} resolved={} lost={}",
        a.trial, a.users, outcome.resolved, outcome.lost
    )?;
    Ok(())
}

fn run_verify() -> cra_sim::Result<bool> {
    let mut out = io::stdout().lock();
    let mut ok = true;
    for r in verify::run_all() {
        ok &= r.passed();
        writeln!(out, "{r}")?;
    }
    Ok(ok)
}

fn report(err: &Error) {
    let body = match err {
        Error::InvalidConfig(v) => json!({
            "error": "invalid_config",
            "violations": v.iter().map(|c| json!({"field": c.field, "message": c.message})).collect::<Vec<_>>(),
        }),
        Error::Io(e) => json!({"error": "io", "message": e.to_string()}),
        Error::Json(e) => json!({"error": "config_syntax", "message": e.to_string()}),
        other => json!({"error": "invalid_argument", "message": other.to_string()}),
    };
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Bounds(a) => bounds(a).map(|_| true),
        Command::Verify => run_verify(),
        Command::Trace(a) => trace(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            report(&e);
            ExitCode::from(2)
        }
    }
}
