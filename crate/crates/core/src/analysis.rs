//! Closed-form benchmarks: the unresolvable-collision floor and the
//! packet loss rate without any SIC, slotted and framed.

use crate::error::{Error, Result};
use crate::model::{mean_degree, DegreeDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `C = binom(N_P, p)`, `N = K_s`.
    SlottedUnframed,
    /// `C = binom(N_s, r) binom(N_P, p)^r`, `N = K_a`.
    FramedNested,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundQuery {
    pub scenario: Scenario,
    pub n_pilots: usize,
    /// Ignored for the unframed scenario.
    pub n_slots: usize,
    pub r: usize,
    pub p: usize,
    pub n_users: usize,
}

impl BoundQuery {
    pub fn slotted(n_pilots: usize, p: usize, k_s: usize) -> Self {
        Self {
            scenario: Scenario::SlottedUnframed,
            n_pilots,
            n_slots: 1,
            r: 1,
            p,
            n_users: k_s,
        }
    }

    pub fn framed(n_slots: usize, n_pilots: usize, r: usize, p: usize, k_a: usize) -> Self {
        Self {
            scenario: Scenario::FramedNested,
            n_pilots,
            n_slots,
            r,
            p,
            n_users: k_a,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p > self.n_pilots {
            return Err(Error::InvalidQuery(format!(
                "p = {} must lie in [1, {}]",
                self.p, self.n_pilots
            )));
        }
        if self.scenario == Scenario::FramedNested && (self.r == 0 || self.r > self.n_slots) {
            return Err(Error::InvalidQuery(format!(
                "r = {} must lie in [1, {}]",
                self.r, self.n_slots
            )));
        }
        if self.n_users == 0 {
            return Err(Error::InvalidQuery("at least one user required".into()));
        }
        Ok(())
    }

    /// Number of distinct choices a user can make.
    pub fn choice_count(&self) -> f64 {
        let pilots = binomial(self.n_pilots, self.p);
        match self.scenario {
            Scenario::SlottedUnframed => pilots,
            Scenario::FramedNested => binomial(self.n_slots, self.r) * pilots.powi(self.r as i32),
        }
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Probability that at least two of `N` users make the same choice out of
/// `C` equally likely ones: `1 − Π_{i<N} (C − i)/C`, in the log domain.
pub fn collision_prob(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let c = q.choice_count();
    let n = q.n_users;
    if n <= 1 {
        return Ok(0.0);
    }
    if (n - 1) as f64 >= c {
        return Ok(1.0);
    }
    let log_none: f64 = (1..n).map(|i| (-(i as f64) / c).ln_1p()).sum();
    Ok(-log_none.exp_m1())
}

/// At least two users are lost per unresolvable collision: `2 P_u / N`.
pub fn plr_lower_bound(q: &BoundQuery) -> Result<f64> {
    Ok(2.0 * collision_prob(q)? / q.n_users as f64)
}

fn check_mean(psi: &DegreeDistribution, n_pilots: usize) -> Result<f64> {
    let m = mean_degree(psi);
    if m > n_pilots as f64 {
        return Err(Error::InvalidQuery(format!(
            "mean preamble order {m} exceeds {n_pilots} pilots"
        )));
    }
    Ok(m)
}

/// Slotted, unframed loss without SIC:
/// `Σ_p Ψ_p (1 − (1 − Ψ'(1)/N_P)^{K_s−1})^p`.
pub fn plr_slotted_nosic(psi: &DegreeDistribution, n_pilots: usize, k_s: usize) -> Result<f64> {
    let mean = check_mean(psi, n_pilots)?;
    if k_s == 0 {
        return Err(Error::InvalidQuery("k_s must be at least 1".into()));
    }
    let hit = 1.0 - (1.0 - mean / n_pilots as f64).powi(k_s as i32 - 1);
    Ok(psi.iter().map(|(p, w)| w * hit.powi(p as i32)).sum())
}

/// Exact slotted loss without SIC for a concentrated order `p`, by
/// inclusion-exclusion over the tagged user's pilots:
/// `Σ_j (−1)^j binom(p, j) (binom(N_P − j, p) / binom(N_P, p))^{K_s−1}`.
pub fn plr_slotted_nosic_exact(n_pilots: usize, p: usize, k_s: usize) -> Result<f64> {
    if p == 0 || p > n_pilots || k_s == 0 {
        return Err(Error::InvalidQuery("need 1 <= p <= n_pilots and k_s >= 1".into()));
    }
    let total = binomial(n_pilots, p);
    let mut acc = CompensatedSum::default();
    for j in 0..=p {
        let miss = binomial(n_pilots - j, p) / total;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * binomial(p, j) * miss.powi(k_s as i32 - 1));
    }
    Ok(acc.value().max(0.0))
}

/// Framed loss without SIC:
/// `Σ_r Λ_r [Σ_p Ψ_p Σ_j (−1)^j binom(p, j) b_j^{K_a−1}]^r` with
/// `b_j = 1 − Λ'(1)/N_s + (Λ'(1)/N_s)(1 − Ψ'(1)/N_P)^j`.
pub fn plr_framed_nosic(
    lambda: &DegreeDistribution,
    psi: &DegreeDistribution,
    n_slots: usize,
    n_pilots: usize,
    k_a: usize,
) -> Result<f64> {
    let psi_mean = check_mean(psi, n_pilots)?;
    let lambda_mean = mean_degree(lambda);
    if lambda_mean > n_slots as f64 {
        return Err(Error::InvalidQuery(format!(
            "mean repetition degree {lambda_mean} exceeds {n_slots} slots"
        )));
    }
    if k_a == 0 {
        return Err(Error::InvalidQuery("k_a must be at least 1".into()));
    }
    let occupancy = lambda_mean / n_slots as f64;
    let free = 1.0 - psi_mean / n_pilots as f64;
    let exponent = k_a as i32 - 1;
    let mut replica = CompensatedSum::default();
    for (p, w) in psi.iter() {
        for j in 0..=p {
            let base = 1.0 - occupancy + occupancy * free.powi(j as i32);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            replica.add(w * sign * binomial(p, j) * base.powi(exponent));
        }
    }
    let replica_lost = replica.value().clamp(0.0, 1.0);
    Ok(lambda.iter().map(|(r, w)| w * replica_lost.powi(r as i32)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conc(d: usize) -> DegreeDistribution {
        DegreeDistribution::concentrated(d)
    }

    #[test]
    fn collision_prob_examples() {
        assert_eq!(collision_prob(&BoundQuery::slotted(4, 2, 1)).unwrap(), 0.0);
        let q = BoundQuery::slotted(4, 2, 2);
        assert!((collision_prob(&q).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // more users than choices
        assert_eq!(collision_prob(&BoundQuery::slotted(4, 2, 8)).unwrap(), 1.0);
    }

    #[test]
    fn collision_prob_matches_direct_product_small_c() {
        for n in 1..=7 {
            let q = BoundQuery::slotted(4, 2, n);
            let direct = 1.0 - (0..n).map(|i| (6.0 - i as f64) / 6.0).product::<f64>();
            assert!((collision_prob(&q).unwrap() - direct.min(1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn framed_collision_prob_values() {
        let p1 = collision_prob(&BoundQuery::framed(62, 128, 2, 1, 1800)).unwrap();
        let p2 = collision_prob(&BoundQuery::framed(62, 128, 2, 2, 1800)).unwrap();
        assert!((p1 - 5.09e-2).abs() < 0.005e-2, "{p1}");
        assert!((p2 - 1.30e-5).abs() < 0.005e-5, "{p2}");
    }

    #[test]
    fn lower_bound_single_user_is_zero() {
        assert_eq!(plr_lower_bound(&BoundQuery::framed(62, 128, 2, 2, 1)).unwrap(), 0.0);
    }

    #[test]
    fn invalid_queries() {
        assert!(collision_prob(&BoundQuery::slotted(4, 5, 2)).is_err());
        assert!(collision_prob(&BoundQuery::framed(2, 4, 3, 1, 2)).is_err());
        assert!(plr_slotted_nosic(&conc(5), 4, 3).is_err());
    }

    #[test]
    fn slotted_examples() {
        assert_eq!(plr_slotted_nosic(&conc(2), 128, 1).unwrap(), 0.0);
        assert!((plr_slotted_nosic(&conc(1), 2, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((plr_slotted_nosic(&conc(2), 4, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((plr_slotted_nosic_exact(4, 2, 2).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn framed_single_user_is_zero() {
        let v = plr_framed_nosic(&conc(2), &conc(3), 62, 128, 1).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn framed_reduces_to_slotted_for_one_slot() {
        let psis = [
            conc(1),
            conc(3),
            DegreeDistribution::new([(1, 0.2), (2, 0.5), (4, 0.3)]).unwrap(),
        ];
        for psi in &psis {
            for k in [1, 2, 5, 17, 64] {
                let f = plr_framed_nosic(&conc(1), psi, 1, 32, k).unwrap();
                let s = plr_slotted_nosic(psi, 32, k).unwrap();
                assert!((f - s).abs() < 1e-12, "{f} vs {s}");
            }
        }
    }

    #[test]
    fn monotone_in_load() {
        let mut prev = (0.0, 0.0, 0.0);
        for n in (1..3000).step_by(37) {
            let a = plr_lower_bound(&BoundQuery::framed(62, 128, 2, 1, n)).unwrap();
            let b = plr_slotted_nosic(&conc(2), 128, n.min(400)).unwrap();
            let c = plr_framed_nosic(&conc(2), &conc(2), 62, 128, n).unwrap();
            // 2 P_u / N is nondecreasing while P_u grows faster than N
            assert!(b >= prev.1 - 1e-15 && c >= prev.2 - 1e-15);
            if n < 2000 {
                assert!(a >= prev.0 - 1e-18);
            }
            prev = (a, b, c);
        }
    }

    #[test]
    fn compensated_sum_cancels() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
