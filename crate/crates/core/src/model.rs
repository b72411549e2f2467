//! Protocol configuration, degree distributions, and the payload-seeded
//! derivation of every random choice a user makes in a frame.
//!
//! A transmitter draws its repetition degree, its slots and its per-slot
//! pilot subsets from a generator keyed by its own information bits. The
//! receiver replays the same derivation after decoding a packet, so every
//! replica of that user can be located without side information.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{crc, DATA_BITS, INFO_BITS, PAYLOAD_SYMBOLS, USER_ID_BITS};
use crate::error::{ConfigViolation, Error, Result};

const PROB_TOLERANCE: f64 = 1e-12;

/// Finite degree distribution, `Λ(x) = Σ_d Λ_d x^d` held as a map from
/// degree to probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegreeDistribution {
    coefficients: BTreeMap<usize, f64>,
}

impl DegreeDistribution {
    pub fn new(coefficients: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let d = Self {
            coefficients: coefficients.into_iter().collect(),
        };
        let v = d.violations("distribution", usize::MAX);
        if v.is_empty() {
            Ok(d)
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// The concentrated distribution `x^degree`.
    pub fn concentrated(degree: usize) -> Self {
        Self {
            coefficients: BTreeMap::from([(degree, 1.0)]),
        }
    }

    pub fn coefficients(&self) -> &BTreeMap<usize, f64> {
        &self.coefficients
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coefficients.iter().map(|(&d, &p)| (d, p))
    }

    pub fn max_degree(&self) -> usize {
        self.coefficients.keys().next_back().copied().unwrap_or(0)
    }

    /// Returns the degree if all mass sits on a single degree.
    pub fn concentrated_degree(&self) -> Option<usize> {
        let mut nonzero = self.iter().filter(|&(_, p)| p > 0.0);
        match (nonzero.next(), nonzero.next()) {
            (Some((d, _)), None) => Some(d),
            _ => None,
        }
    }

    /// Inverse-CDF sampling from a uniform variate in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (d, p) in self.iter() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = d;
            if u < acc {
                return d;
            }
        }
        last
    }

    pub(crate) fn violations(&self, field: &'static str, max_degree: usize) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        if self.coefficients.is_empty() {
            out.push(ConfigViolation::new(field, "distribution is empty"));
            return out;
        }
        if self.coefficients.contains_key(&0) {
            out.push(ConfigViolation::new(field, "degrees must be at least 1"));
        }
        if self
            .coefficients
            .values()
            .any(|&p| !(0.0..=1.0).contains(&p) || p.is_nan())
        {
            out.push(ConfigViolation::new(field, "probabilities must lie in [0, 1]"));
        }
        let total: f64 = self.coefficients.values().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            out.push(ConfigViolation::new(
                field,
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        if self.max_degree() > max_degree {
            let what = if field == "psi" { "pilots" } else { "slots" };
            out.push(ConfigViolation::new(
                field,
                format!(
                    "support exceeds {what}: max degree {} > {max_degree}",
                    self.max_degree()
                ),
            ));
        }
        out
    }
}

/// Mean degree, i.e. the PGF derivative at 1.
pub fn mean_degree(d: &DegreeDistribution) -> f64 {
    d.iter().map(|(k, p)| k as f64 * p).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiverMode {
    /// Single pilot sweep per slot, no cancellation.
    NoSic,
    /// Intra-slot SIC across pilots with restart.
    InnerOnly,
    /// Intra-slot SIC plus per-slot acknowledgements.
    InnerAck,
    /// Intra-slot SIC followed by buffer-driven inter-slot SIC.
    Nested,
    /// Nested SIC on a frame thinned by acknowledgements.
    NestedAck,
}

impl ReceiverMode {
    pub const ALL: [ReceiverMode; 5] = [
        ReceiverMode::NoSic,
        ReceiverMode::InnerOnly,
        ReceiverMode::InnerAck,
        ReceiverMode::Nested,
        ReceiverMode::NestedAck,
    ];

    pub fn uses_ack(self) -> bool {
        matches!(self, ReceiverMode::InnerAck | ReceiverMode::NestedAck)
    }

    pub fn uses_inner_sic(self) -> bool {
        !matches!(self, ReceiverMode::NoSic)
    }

    pub fn uses_outer_sic(self) -> bool {
        matches!(self, ReceiverMode::Nested | ReceiverMode::NestedAck)
    }

    pub fn name(self) -> &'static str {
        match self {
            ReceiverMode::NoSic => "NoSic",
            ReceiverMode::InnerOnly => "InnerOnly",
            ReceiverMode::InnerAck => "InnerAck",
            ReceiverMode::Nested => "Nested",
            ReceiverMode::NestedAck => "NestedAck",
        }
    }
}

impl std::str::FromStr for ReceiverMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown receiver mode `{s}`"))
    }
}

impl std::fmt::Display for ReceiverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// All protocol and PHY parameters of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n_slots: usize,
    pub n_pilots: usize,
    pub n_antennas: usize,
    pub payload_symbols: usize,
    pub lambda: DegreeDistribution,
    pub psi: DegreeDistribution,
    /// Per-symbol, per-antenna SNR in dB with unit channel variance.
    pub snr_db: f64,
    pub receiver_mode: ReceiverMode,
    /// `false` selects the single-slot, unframed scenario.
    pub framed: bool,
}

impl ProtocolConfig {
    /// A framed scenario with concentrated degrees.
    pub fn framed(n_slots: usize, n_pilots: usize, n_antennas: usize, r: usize, p: usize) -> Self {
        Self {
            n_slots,
            n_pilots,
            n_antennas,
            payload_symbols: PAYLOAD_SYMBOLS,
            lambda: DegreeDistribution::concentrated(r),
            psi: DegreeDistribution::concentrated(p),
            snr_db: 10.0,
            receiver_mode: ReceiverMode::Nested,
            framed: true,
        }
    }

    /// A single-slot scenario with preamble order `p`.
    pub fn slotted(n_pilots: usize, n_antennas: usize, p: usize) -> Self {
        Self {
            framed: false,
            receiver_mode: ReceiverMode::InnerOnly,
            ..Self::framed(1, n_pilots, n_antennas, 1, p)
        }
    }

    pub fn with_mode(mut self, mode: ReceiverMode) -> Self {
        self.receiver_mode = mode;
        self
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    /// Noise variance per complex entry, `10^(-snr/10)`.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut v = Vec::new();
        if self.n_slots == 0 {
            v.push(ConfigViolation::new("n_slots", "must be at least 1"));
        }
        if !self.n_pilots.is_power_of_two() {
            v.push(ConfigViolation::new(
                "n_pilots",
                format!("{} is not a power of two", self.n_pilots),
            ));
        }
        if self.n_antennas == 0 {
            v.push(ConfigViolation::new("n_antennas", "must be at least 1"));
        }
        if self.payload_symbols != PAYLOAD_SYMBOLS {
            v.push(ConfigViolation::new(
                "payload_symbols",
                format!(
                    "codec produces {PAYLOAD_SYMBOLS} symbols, got {}",
                    self.payload_symbols
                ),
            ));
        }
        if self.snr_db.is_nan() {
            v.push(ConfigViolation::new("snr_db", "must be a number"));
        }
        v.extend(self.lambda.violations("lambda", self.n_slots));
        v.extend(self.psi.violations("psi", self.n_pilots));
        if !self.framed {
            if self.lambda.concentrated_degree() != Some(1) {
                v.push(ConfigViolation::new(
                    "lambda",
                    "unframed scenario requires the concentrated distribution r = 1",
                ));
            }
            if self.n_slots != 1 {
                v.push(ConfigViolation::new(
                    "n_slots",
                    "unframed scenario uses exactly one slot",
                ));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// Returns the config unchanged, or every violated invariant.
pub fn validate_config(cfg: ProtocolConfig) -> Result<ProtocolConfig> {
    cfg.validate()?;
    Ok(cfg)
}

/// Information bits of one packet: user id, filler data and CRC,
/// stored one bit per byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Payload(Vec<u8>);

impl Payload {
    /// Assembles a payload from a user id and random filler bits, then
    /// appends the CRC.
    pub fn generate<R: Rng + ?Sized>(user_id: u32, rng: &mut R) -> Self {
        let mut bits = Vec::with_capacity(INFO_BITS);
        bits.extend((0..USER_ID_BITS).rev().map(|i| ((user_id >> i) & 1) as u8));
        bits.extend((USER_ID_BITS..DATA_BITS).map(|_| rng.random::<bool>() as u8));
        crc::attach(&mut bits);
        Self(bits)
    }

    /// Wraps raw information bits; the length must be exactly `INFO_BITS`.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.len() != INFO_BITS {
            return Err(Error::LengthMismatch {
                expected: INFO_BITS,
                actual: bits.len(),
            });
        }
        Ok(Self(bits.into_iter().map(|b| b & 1).collect()))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn user_id(&self) -> u32 {
        self.0[..USER_ID_BITS]
            .iter()
            .fold(0u32, |acc, &b| (acc << 1) | b as u32)
    }

    pub fn crc_ok(&self) -> bool {
        crc::check(&self.0)
    }

    fn packed(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
            .collect()
    }
}

/// One user's payload together with every placement choice it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTransmission {
    pub user_id: u32,
    pub payload: Payload,
    pub repetition_degree: usize,
    /// Sorted, distinct.
    pub slot_indices: Vec<usize>,
    /// One sorted pilot subset per entry of `slot_indices`.
    pub pilot_subsets: Vec<Vec<usize>>,
}

impl UserTransmission {
    /// Pilot subset used in `slot`, if the user transmits there.
    pub fn subset_in_slot(&self, slot: usize) -> Option<&[usize]> {
        self.slot_indices
            .binary_search(&slot)
            .ok()
            .map(|i| self.pilot_subsets[i].as_slice())
    }

    pub fn placements(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.slot_indices
            .iter()
            .copied()
            .zip(self.pilot_subsets.iter().map(Vec::as_slice))
    }

    /// Same slots and same per-slot subsets.
    pub fn same_choices(&self, other: &Self) -> bool {
        self.slot_indices == other.slot_indices && self.pilot_subsets == other.pilot_subsets
    }
}

/// Draws `k` distinct values from `0..n` by a partial Fisher-Yates shuffle,
/// returned sorted.
fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

fn choice_rng(payload: &Payload) -> ChaCha8Rng {
    let digest = Sha256::digest(payload.packed());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Replays the choices a transmitter makes from its payload bits: the
/// repetition degree, the slot set, and a pilot subset per chosen slot
/// (each with its own independently drawn preamble order).
pub fn derive_choices(payload: &Payload, cfg: &ProtocolConfig) -> Result<UserTransmission> {
    let mut v = cfg.lambda.violations("lambda", cfg.n_slots);
    v.extend(cfg.psi.violations("psi", cfg.n_pilots));
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let mut rng = choice_rng(payload);
    let r = cfg.lambda.sample_with(rng.random::<f64>());
    let slot_indices = sample_without_replacement(&mut rng, cfg.n_slots, r);
    let pilot_subsets = slot_indices
        .iter()
        .map(|_| {
            let p = cfg.psi.sample_with(rng.random::<f64>());
            sample_without_replacement(&mut rng, cfg.n_pilots, p)
        })
        .collect();
    Ok(UserTransmission {
        user_id: payload.user_id(),
        payload: payload.clone(),
        repetition_degree: r,
        slot_indices,
        pilot_subsets,
    })
}
