//! Nested SIC receiver.
//!
//! Every slot is first processed on its own: each pilot is tried in turn
//! (matched-filter channel estimate, MRC payload estimate, decode) and any
//! validated packet is rebuilt from its payload and cancelled from the slot
//! with the pilot's channel estimate, after which the pilot scan restarts
//! from the first pilot. Decoded packets go into a FIFO buffer. In the
//! nested modes the buffer is then drained frame-wide: each packet's other
//! replicas are cancelled with a payload-aided channel estimate and the
//! touched slots are scanned again.
//!
//! The matched filter returns `h/√p` for a clean pilot of a user whose
//! preamble mixes `p` pilots, so the intra-slot cancellation scales the
//! estimate by `√p` before subtracting the rebuilt packet.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{self, EncodedPacket, CORRECTABLE};
use crate::model::{derive_choices, Payload, ProtocolConfig, ReceiverMode, UserTransmission};
use crate::phy::{
    build_preamble, draw_channel, estimate_channel_from_payload, estimate_channel_mf,
    estimate_payload_mrc, Contribution, PilotBook, SlotSignal,
};
use crate::seed::mix;

/// Maps a validated payload back to the placement its sender used.
pub trait PlacementResolver: Sync {
    fn resolve(&self, payload: &Payload) -> Option<UserTransmission>;
}

/// The production resolver: replays the payload-seeded choices.
pub struct DerivedPlacement<'a>(pub &'a ProtocolConfig);

impl PlacementResolver for DerivedPlacement<'_> {
    fn resolve(&self, payload: &Payload) -> Option<UserTransmission> {
        derive_choices(payload, self.0).ok()
    }
}

/// Looks placements up by user id. Used for hand-constructed frames whose
/// placements are not derived from their payloads.
pub struct TablePlacement(pub HashMap<u32, UserTransmission>);

impl TablePlacement {
    pub fn new(users: impl IntoIterator<Item = UserTransmission>) -> Self {
        Self(users.into_iter().map(|u| (u.user_id, u)).collect())
    }
}

impl PlacementResolver for TablePlacement {
    fn resolve(&self, payload: &Payload) -> Option<UserTransmission> {
        self.0
            .get(&payload.user_id())
            .filter(|u| &u.payload == payload)
            .cloned()
    }
}

/// How a payload estimate is judged valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodecMode {
    /// Hard-decision BCH decoding followed by the CRC check.
    #[default]
    Full,
    /// Declares a packet valid iff its sliced bits are within `t` errors of
    /// a codeword actually sent on that pilot. An approximation for fast
    /// sweeps; it needs the transmitted frame.
    Genie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Inner,
    Outer,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Inner => "inner",
            Phase::Outer => "outer",
        })
    }
}

/// One decode event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub slot: usize,
    pub pilot: usize,
    pub sic_iteration: usize,
    pub user: u32,
    pub phase: Phase,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slot={} pilot={} sic_iteration={} user={} phase={}",
            self.slot, self.pilot, self.sic_iteration, self.user, self.phase
        )
    }
}

/// A validated packet and everything needed to cancel its replicas.
#[derive(Debug, Clone)]
pub struct DecodedPacket {
    pub payload: Payload,
    pub placement: UserTransmission,
    pub symbols: Vec<Complex64>,
    pub slot: usize,
    pub pilot: usize,
    pub sic_iteration: usize,
    /// `√p` of the subset used in the decoding slot.
    pub effective_scale: f64,
}

impl DecodedPacket {
    pub fn user_id(&self) -> u32 {
        self.payload.user_id()
    }
}

/// Intra-slot cancellation with the pilot estimate: subtracts
/// `(√p φ) p` and `(√p φ) x`.
pub fn inner_sic_subtract(
    slot: &mut SlotSignal,
    phi: &[Complex64],
    pkt: &DecodedPacket,
    book: &PilotBook,
) {
    let subset = pkt
        .placement
        .subset_in_slot(pkt.slot)
        .expect("decode slot belongs to the placement");
    let preamble = build_preamble(subset, book).expect("nonempty subset");
    let h: Vec<Complex64> = phi.iter().map(|v| v * pkt.effective_scale).collect();
    slot.subtract(&h, &preamble, &pkt.symbols);
}

/// Payload-aided channel estimate of a known replica, `Y xᴴ / ‖x‖²`.
pub fn outer_sic_estimate(slot: &SlotSignal, x: &[Complex64]) -> Vec<Complex64> {
    estimate_channel_from_payload(slot, x).expect("QPSK payload has nonzero energy")
}

/// Cancels a replica given its channel estimate and rebuilt preamble.
pub fn outer_sic_subtract(
    slot: &mut SlotSignal,
    h_hat: &[Complex64],
    preamble: &[f64],
    x: &[Complex64],
) {
    slot.subtract(h_hat, preamble, x);
}

/// A transmitter's frame as sent.
#[derive(Debug, Clone)]
pub struct TxUser {
    pub tx: UserTransmission,
    pub packet: EncodedPacket,
    /// Aligned with `tx.slot_indices`.
    pub preambles: Vec<Vec<f64>>,
}

impl TxUser {
    pub fn new(tx: UserTransmission, book: &PilotBook) -> Self {
        let packet = codec::encode_payload(&tx.payload);
        let preambles = tx
            .pilot_subsets
            .iter()
            .map(|s| build_preamble(s, book).expect("nonempty subset"))
            .collect();
        Self {
            tx,
            packet,
            preambles,
        }
    }
}

struct SlotOccupant {
    user: usize,
    placement: usize,
    channel: Vec<Complex64>,
}

/// All randomness of one frame: transmitters, block-fading channels and a
/// noise seed per slot. Slots are synthesized on demand so that
/// acknowledged users can be left out of later slots while every other
/// quantity stays identical across receiver modes.
pub struct FrameRealization {
    pub users: Vec<TxUser>,
    slots: Vec<Vec<SlotOccupant>>,
    seed: u64,
    n_antennas: usize,
    n_pilots: usize,
    n_symbols: usize,
    noise_variance: f64,
}

impl FrameRealization {
    pub fn new(
        users: Vec<UserTransmission>,
        cfg: &ProtocolConfig,
        book: &PilotBook,
        seed: u64,
    ) -> Self {
        let users: Vec<TxUser> = users.into_iter().map(|u| TxUser::new(u, book)).collect();
        let mut slots: Vec<Vec<SlotOccupant>> = (0..cfg.n_slots).map(|_| Vec::new()).collect();
        for (ui, u) in users.iter().enumerate() {
            for (pi, &n) in u.tx.slot_indices.iter().enumerate() {
                slots[n].push(SlotOccupant {
                    user: ui,
                    placement: pi,
                    channel: Vec::new(),
                });
            }
        }
        for (n, occ) in slots.iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, n as u64, 0]));
            for o in occ.iter_mut() {
                o.channel = draw_channel(&mut rng, cfg.n_antennas);
            }
        }
        Self {
            users,
            slots,
            seed,
            n_antennas: cfg.n_antennas,
            n_pilots: cfg.n_pilots,
            n_symbols: cfg.payload_symbols,
            noise_variance: cfg.noise_variance(),
        }
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    /// True channel of `user` (by index) in `slot`.
    pub fn channel(&self, slot: usize, user: usize) -> Option<&[Complex64]> {
        self.slots[slot]
            .iter()
            .find(|o| o.user == user)
            .map(|o| o.channel.as_slice())
    }

    /// Received signal of `slot` with every user in `excluded` silent.
    pub fn synthesize(&self, slot: usize, excluded: &HashSet<u32>) -> SlotSignal {
        let mut s = SlotSignal::zeros(self.n_antennas, self.n_pilots, self.n_symbols);
        for o in &self.slots[slot] {
            let u = &self.users[o.user];
            if excluded.contains(&u.tx.user_id) {
                continue;
            }
            s.add(Contribution {
                preamble: &u.preambles[o.placement],
                symbols: &u.packet.symbols,
                channel: &o.channel,
            })
            .expect("dimensions fixed by config");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[self.seed, slot as u64, 1]));
        s.add_noise(&mut rng, self.noise_variance);
        s
    }

    fn genie_candidates(&self, slot: usize, pilot: usize) -> impl Iterator<Item = &TxUser> {
        self.slots[slot].iter().filter_map(move |o| {
            let u = &self.users[o.user];
            u.tx.pilot_subsets[o.placement]
                .contains(&pilot)
                .then_some(u)
        })
    }
}

/// Mutable receiver state across one frame.
pub struct FrameState {
    pub slots: Vec<Option<SlotSignal>>,
    pub decoded_buffer: VecDeque<DecodedPacket>,
    pub resolved_users: BTreeSet<u32>,
    pub ack_set: HashSet<u32>,
    ack_slot: HashMap<u32, usize>,
    /// Users already decoded (and, with SIC, cancelled) in each slot.
    handled: Vec<HashSet<u32>>,
    trace: Option<Vec<TraceEvent>>,
}

impl FrameState {
    pub fn new(n_slots: usize, record_trace: bool) -> Self {
        Self {
            slots: (0..n_slots).map(|_| None).collect(),
            decoded_buffer: VecDeque::new(),
            resolved_users: BTreeSet::new(),
            ack_set: HashSet::new(),
            ack_slot: HashMap::new(),
            handled: (0..n_slots).map(|_| HashSet::new()).collect(),
            trace: record_trace.then(Vec::new),
        }
    }

    pub fn handled_in(&self, slot: usize) -> &HashSet<u32> {
        &self.handled[slot]
    }

    fn accept(&mut self, pkt: DecodedPacket) {
        if self.resolved_users.insert(pkt.user_id()) {
            self.decoded_buffer.push_back(pkt);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FrameOutcome {
    pub resolved: BTreeSet<u32>,
    pub trace: Vec<TraceEvent>,
}

pub struct Receiver<'a, R: PlacementResolver> {
    mode: ReceiverMode,
    book: &'a PilotBook,
    resolver: R,
    codec_mode: CodecMode,
    genie: Option<&'a FrameRealization>,
}

impl<'a> Receiver<'a, DerivedPlacement<'a>> {
    pub fn new(cfg: &'a ProtocolConfig, book: &'a PilotBook) -> Self {
        Self::with_resolver(cfg.receiver_mode, book, DerivedPlacement(cfg))
    }
}

impl<'a, R: PlacementResolver> Receiver<'a, R> {
    pub fn with_resolver(mode: ReceiverMode, book: &'a PilotBook, resolver: R) -> Self {
        Self {
            mode,
            book,
            resolver,
            codec_mode: CodecMode::Full,
            genie: None,
        }
    }

    /// Switches to the genie validity test against the given frame.
    pub fn genie(mut self, frame: &'a FrameRealization) -> Self {
        self.codec_mode = CodecMode::Genie;
        self.genie = Some(frame);
        self
    }

    pub fn mode(&self) -> ReceiverMode {
        self.mode
    }

    fn validate(&self, n: usize, j: usize, x_hat: &[Complex64]) -> Option<(Payload, UserTransmission)> {
        let (payload, placement) = match (self.codec_mode, self.genie) {
            (CodecMode::Genie, Some(frame)) => {
                let bits = codec::slice_codeword(x_hat);
                let u = frame
                    .genie_candidates(n, j)
                    .find(|u| codec::hamming(&bits, &u.packet.codeword) <= CORRECTABLE)?;
                (u.tx.payload.clone(), u.tx.clone())
            }
            _ => {
                let payload = codec::decode_symbols(x_hat)?;
                let placement = self.resolver.resolve(&payload)?;
                (payload, placement)
            }
        };
        // a packet whose replayed placement does not use this slot and pilot
        // cannot have been received here
        placement
            .subset_in_slot(n)
            .filter(|s| s.contains(&j))?;
        Some((payload, placement))
    }

    /// Per-slot pilot scan. With SIC every validated packet is cancelled and
    /// the scan restarts at the first pilot; it ends when a full sweep
    /// yields nothing new. Without SIC a single sweep is made.
    pub fn process_slot(
        &self,
        n: usize,
        slot: &mut SlotSignal,
        state: &mut FrameState,
        phase: Phase,
    ) -> Vec<DecodedPacket> {
        let sic = self.mode.uses_inner_sic();
        let mut out = Vec::new();
        'sweep: loop {
            for j in 0..self.book.len() {
                let phi = estimate_channel_mf(slot, j, self.book);
                let Some(x_hat) = estimate_payload_mrc(slot, &phi) else {
                    continue;
                };
                let Some((payload, placement)) = self.validate(n, j, &x_hat) else {
                    continue;
                };
                let user = payload.user_id();
                if state.handled[n].contains(&user) {
                    continue;
                }
                let p = placement.subset_in_slot(n).map_or(1, <[usize]>::len);
                let symbols = codec::encode_payload(&payload).symbols;
                let pkt = DecodedPacket {
                    payload,
                    placement,
                    symbols,
                    slot: n,
                    pilot: j,
                    sic_iteration: slot.sic_count,
                    effective_scale: (p as f64).sqrt(),
                };
                if let Some(t) = state.trace.as_mut() {
                    t.push(TraceEvent {
                        slot: n,
                        pilot: j,
                        sic_iteration: slot.sic_count,
                        user,
                        phase,
                    });
                }
                state.handled[n].insert(user);
                if sic {
                    inner_sic_subtract(slot, &phi, &pkt, self.book);
                    out.push(pkt);
                    continue 'sweep;
                }
                out.push(pkt);
            }
            break;
        }
        out
    }

    /// Runs the configured pipeline over a whole frame and returns the ids
    /// of all users with at least one validated packet.
    pub fn run_frame(&self, frame: &FrameRealization, record_trace: bool) -> FrameOutcome {
        let n_slots = frame.n_slots();
        let mut state = FrameState::new(n_slots, record_trace);
        let ack = self.mode.uses_ack();
        let keep_slots = self.mode.uses_outer_sic();
        let none = HashSet::new();

        for n in 0..n_slots {
            let excluded = if ack { &state.ack_set } else { &none };
            let mut slot = frame.synthesize(n, excluded);
            let decoded = self.process_slot(n, &mut slot, &mut state, Phase::Inner);
            for pkt in decoded {
                if ack && state.ack_set.insert(pkt.user_id()) {
                    state.ack_slot.insert(pkt.user_id(), n);
                }
                state.accept(pkt);
            }
            if keep_slots {
                state.slots[n] = Some(slot);
            }
        }

        if keep_slots {
            self.outer_phase(&mut state);
        }

        FrameOutcome {
            resolved: state.resolved_users,
            trace: state.trace.unwrap_or_default(),
        }
    }

    fn outer_phase(&self, state: &mut FrameState) {
        while let Some(pkt) = state.decoded_buffer.pop_front() {
            let user = pkt.user_id();
            let silenced_after = state.ack_slot.get(&user).copied();
            for (m, subset) in pkt.placement.placements() {
                if state.handled[m].contains(&user) {
                    continue;
                }
                if silenced_after.is_some_and(|a| m > a) {
                    continue;
                }
                let mut slot = state.slots[m].take().expect("slot kept for outer phase");
                let h_hat = outer_sic_estimate(&slot, &pkt.symbols);
                let preamble = build_preamble(subset, self.book).expect("nonempty subset");
                outer_sic_subtract(&mut slot, &h_hat, &preamble, &pkt.symbols);
                state.handled[m].insert(user);
                let fresh = self.process_slot(m, &mut slot, state, Phase::Outer);
                state.slots[m] = Some(slot);
                for p in fresh {
                    state.accept(p);
                }
            }
        }
    }
}
