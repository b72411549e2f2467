//! Collision-model abstraction of the frame.
//!
//! Each user occupies a set of (slot, pilot) cells. A replica is decodable
//! iff one of its pilots is used by nobody else in that slot, and a decoded
//! replica is cancelled perfectly. Intra- and inter-slot SIC then reduce to
//! peeling on the slot/pilot grid. No PHY impairments are modelled, which
//! makes this both a fast large-scale simulator and a reference for the
//! closed-form expressions.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ReceiverMode, UserTransmission};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridUser {
    pub id: u32,
    /// Sorted, distinct.
    pub slots: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
}

impl From<&UserTransmission> for GridUser {
    fn from(u: &UserTransmission) -> Self {
        Self {
            id: u.user_id,
            slots: u.slot_indices.clone(),
            subsets: u.pilot_subsets.clone(),
        }
    }
}

/// Slot × pilot occupancy of one frame.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    n_slots: usize,
    n_pilots: usize,
    users: Vec<GridUser>,
    /// `occupancy[slot * n_pilots + pilot]` holds user indices.
    occupancy: Vec<Vec<usize>>,
    /// Per slot, the user indices present.
    slot_members: Vec<Vec<usize>>,
}

impl FrameGrid {
    pub fn new(n_slots: usize, n_pilots: usize, users: Vec<GridUser>) -> Result<Self> {
        let mut occupancy = vec![Vec::new(); n_slots * n_pilots];
        let mut slot_members = vec![Vec::new(); n_slots];
        for (ui, u) in users.iter().enumerate() {
            if u.slots.len() != u.subsets.len() {
                return Err(Error::InvalidQuery(format!(
                    "user {} has {} slots but {} subsets",
                    u.id,
                    u.slots.len(),
                    u.subsets.len()
                )));
            }
            if u.slots.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidQuery(format!(
                    "user {} slots must be sorted and distinct",
                    u.id
                )));
            }
            for (&n, subset) in u.slots.iter().zip(&u.subsets) {
                if n >= n_slots {
                    return Err(Error::InvalidQuery(format!("slot {n} out of range")));
                }
                let mut seen = subset.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != subset.len() || subset.is_empty() {
                    return Err(Error::InvalidQuery(format!(
                        "user {} has an empty or repeated pilot subset",
                        u.id
                    )));
                }
                for &j in subset {
                    if j >= n_pilots {
                        return Err(Error::InvalidQuery(format!("pilot {j} out of range")));
                    }
                    occupancy[n * n_pilots + j].push(ui);
                }
                slot_members[n].push(ui);
            }
        }
        Ok(Self {
            n_slots,
            n_pilots,
            users,
            occupancy,
            slot_members,
        })
    }

    pub fn from_transmissions(n_slots: usize, n_pilots: usize, users: &[UserTransmission]) -> Result<Self> {
        Self::new(n_slots, n_pilots, users.iter().map(GridUser::from).collect())
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_pilots(&self) -> usize {
        self.n_pilots
    }

    pub fn users(&self) -> &[GridUser] {
        &self.users
    }

    pub fn occupants(&self, slot: usize, pilot: usize) -> &[usize] {
        &self.occupancy[slot * self.n_pilots + pilot]
    }

    /// Users present in `slot`, by index.
    pub fn slot_members(&self, slot: usize) -> &[usize] {
        &self.slot_members[slot]
    }

    fn index_of(&self, id: u32) -> Option<usize> {
        self.users.iter().position(|u| u.id == id)
    }

    /// Line-oriented text form: a `grid <slots> <pilots>` header, then one
    /// user per line as `<id> <slot>:<pilot>,<pilot> ...`.
    pub fn to_text(&self) -> String {
        let mut s = format!("grid {} {}\n", self.n_slots, self.n_pilots);
        for u in &self.users {
            write!(s, "{}", u.id).unwrap();
            for (n, sub) in u.slots.iter().zip(&u.subsets) {
                let pilots: Vec<String> = sub.iter().map(ToString::to_string).collect();
                write!(s, " {n}:{}", pilots.join(",")).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut header = None;
        let mut users = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let first = fields.next().unwrap();
            if header.is_none() {
                if first != "grid" {
                    return Err(err(line_no, "expected `grid <slots> <pilots>` header"));
                }
                let mut dim = || -> Result<usize> {
                    fields
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err(line_no, "bad grid dimension"))
                };
                header = Some((dim()?, dim()?));
                continue;
            }
            let id: u32 = first.parse().map_err(|_| err(line_no, "bad user id"))?;
            let mut placements: Vec<(usize, Vec<usize>)> = Vec::new();
            for f in fields {
                let (slot, pilots) = f
                    .split_once(':')
                    .ok_or_else(|| err(line_no, "expected `<slot>:<pilots>`"))?;
                let slot = slot.parse().map_err(|_| err(line_no, "bad slot"))?;
                let mut pilots = pilots
                    .split(',')
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| err(line_no, "bad pilot"))?;
                pilots.sort_unstable();
                placements.push((slot, pilots));
            }
            placements.sort_by_key(|p| p.0);
            users.push(GridUser {
                id,
                slots: placements.iter().map(|p| p.0).collect(),
                subsets: placements.into_iter().map(|p| p.1).collect(),
            });
        }
        let (n_slots, n_pilots) = header.ok_or_else(|| err(0, "missing header"))?;
        Self::new(n_slots, n_pilots, users)
    }
}

/// True iff some pilot of the user's subset in `slot` carries no one else.
pub fn has_singleton(grid: &FrameGrid, user: u32, slot: usize) -> Result<bool> {
    let ui = grid.index_of(user).ok_or(Error::NotInSlot { user, slot })?;
    let u = &grid.users[ui];
    let k = u
        .slots
        .binary_search(&slot)
        .map_err(|_| Error::NotInSlot { user, slot })?;
    Ok(u.subsets[k]
        .iter()
        .any(|&j| grid.occupants(slot, j).len() == 1))
}

/// Mutable peeling state: per-cell counts of users still present.
struct Peeler<'g> {
    grid: &'g FrameGrid,
    count: Vec<u32>,
    /// `present[user][placement]`
    present: Vec<Vec<bool>>,
    resolved: Vec<bool>,
    priority: Vec<usize>,
}

impl<'g> Peeler<'g> {
    fn new(grid: &'g FrameGrid, order: &[usize]) -> Self {
        let mut priority = vec![0; grid.users.len()];
        for (rank, &u) in order.iter().enumerate() {
            priority[u] = rank;
        }
        Self {
            grid,
            count: grid.occupancy.iter().map(|c| c.len() as u32).collect(),
            present: grid.users.iter().map(|u| vec![true; u.slots.len()]).collect(),
            resolved: vec![false; grid.users.len()],
            priority,
        }
    }

    fn placement(&self, u: usize, slot: usize) -> usize {
        self.grid.users[u].slots.binary_search(&slot).unwrap()
    }

    fn is_singleton(&self, u: usize, slot: usize) -> bool {
        let k = self.placement(u, slot);
        self.present[u][k]
            && self.grid.users[u].subsets[k]
                .iter()
                .any(|&j| self.count[slot * self.grid.n_pilots + j] == 1)
    }

    fn remove(&mut self, u: usize, slot: usize) {
        let k = self.placement(u, slot);
        if !self.present[u][k] {
            return;
        }
        self.present[u][k] = false;
        for &j in &self.grid.users[u].subsets[k] {
            self.count[slot * self.grid.n_pilots + j] -= 1;
        }
    }

    fn members_by_priority(&self, slot: usize) -> Vec<usize> {
        let mut m = self.grid.slot_members(slot).to_vec();
        m.sort_by_key(|&u| self.priority[u]);
        m
    }

    /// Single pass without cancellation.
    fn sweep_no_sic(&mut self, slot: usize) {
        for u in self.members_by_priority(slot) {
            if self.is_singleton(u, slot) {
                self.resolved[u] = true;
            }
        }
    }

    /// Intra-slot fixpoint; returns true if anything was resolved.
    fn peel_slot(&mut self, slot: usize) -> bool {
        let members = self.members_by_priority(slot);
        let mut any = false;
        'restart: loop {
            for &u in &members {
                if self.is_singleton(u, slot) {
                    self.resolved[u] = true;
                    self.remove(u, slot);
                    any = true;
                    continue 'restart;
                }
            }
            return any;
        }
    }

    /// Removes resolved users everywhere and re-peels until nothing changes.
    fn outer(&mut self) {
        loop {
            let mut touched = vec![false; self.grid.n_slots];
            for u in 0..self.grid.users.len() {
                if !self.resolved[u] {
                    continue;
                }
                for k in 0..self.present[u].len() {
                    if self.present[u][k] {
                        let slot = self.grid.users[u].slots[k];
                        self.remove(u, slot);
                        touched[slot] = true;
                    }
                }
            }
            let mut progress = false;
            for (slot, &t) in touched.iter().enumerate() {
                if t {
                    progress |= self.peel_slot(slot);
                }
            }
            if !progress {
                return;
            }
        }
    }

    fn resolved_ids(&self) -> BTreeSet<u32> {
        self.resolved
            .iter()
            .zip(&self.grid.users)
            .filter(|(r, _)| **r)
            .map(|(_, u)| u.id)
            .collect()
    }
}

/// Users resolved under `mode` with ideal singleton decoding.
pub fn peel_frame(grid: &FrameGrid, mode: ReceiverMode) -> BTreeSet<u32> {
    let order: Vec<usize> = (0..grid.users.len()).collect();
    peel_frame_in_order(grid, mode, &order)
}

/// As [`peel_frame`], scanning users of a slot in the given priority order
/// (a permutation of user indices).
pub fn peel_frame_in_order(grid: &FrameGrid, mode: ReceiverMode, order: &[usize]) -> BTreeSet<u32> {
    let mut p = Peeler::new(grid, order);
    match mode {
        ReceiverMode::NoSic => {
            for n in 0..grid.n_slots {
                p.sweep_no_sic(n);
            }
        }
        ReceiverMode::InnerOnly | ReceiverMode::Nested => {
            for n in 0..grid.n_slots {
                p.peel_slot(n);
            }
        }
        ReceiverMode::InnerAck | ReceiverMode::NestedAck => {
            for n in 0..grid.n_slots {
                for u in grid.slot_members(n).to_vec() {
                    if p.resolved[u] {
                        p.remove(u, n);
                    }
                }
                p.peel_slot(n);
            }
        }
    }
    if mode.uses_outer_sic() {
        p.outer();
    }
    p.resolved_ids()
}

/// Number of users whose complete choice tuple (slots and per-slot pilot
/// subsets) is shared with at least one other user.
pub fn unresolvable_collision_count(users: &[GridUser]) -> usize {
    let mut groups: HashMap<(&[usize], &[Vec<usize>]), usize> = HashMap::new();
    for u in users {
        *groups.entry((&u.slots, &u.subsets)).or_default() += 1;
    }
    groups.values().filter(|&&c| c >= 2).sum()
}

/// Largest joint outcome space the exhaustive enumerator accepts.
pub const MAX_ENUMERATION: u64 = 100_000_000;

fn subsets_of(n: usize, p: usize) -> Vec<u64> {
    (0u64..(1u64 << n))
        .filter(|m| m.count_ones() as usize == p)
        .collect()
}

/// Exact single-slot loss probability without SIC, for `k_s` users all of
/// order `p` on `n_pilots` pilots, by enumeration of every joint choice of
/// the interferers (the tagged user's subset is fixed by symmetry).
pub fn exact_slot_nosic_loss(n_pilots: usize, p: usize, k_s: usize) -> Result<f64> {
    if p == 0 || p > n_pilots || n_pilots > 63 || k_s == 0 {
        return Err(Error::InvalidQuery("need 1 <= p <= n_pilots <= 63, k_s >= 1".into()));
    }
    let subsets = subsets_of(n_pilots, p);
    let c = subsets.len() as u64;
    let outcomes = c
        .checked_pow((k_s - 1) as u32)
        .filter(|&o| o <= MAX_ENUMERATION)
        .ok_or_else(|| Error::InvalidQuery("enumeration space too large".into()))?;
    let tagged: u64 = (1u64 << p) - 1;
    let mut lost = 0u64;
    let mut digits = vec![0usize; k_s - 1];
    for _ in 0..outcomes {
        let covered = digits.iter().fold(0u64, |acc, &d| acc | subsets[d]);
        if covered & tagged == tagged {
            lost += 1;
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < subsets.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(lost as f64 / outcomes as f64)
}
