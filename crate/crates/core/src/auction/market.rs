//! Sealed-bid second-price auction between signal phases.
//!
//! Amounts are integer micro-euros so that phase totals are exact and the
//! winning bidders' payments can be apportioned to sum exactly to the
//! runner-up total.

use std::cmp::Ordering;

use serde::Serialize;

use crate::metering::ActiveMovements;
use crate::scenario::{LaneId, MovementId, PhaseId};
use crate::sim::vehicle::VehicleId;

/// Amount in micro-euros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_eur(eur: f64) -> Self {
        if eur.is_finite() && eur > 0.0 {
            Money((eur * 1e6).round() as u64)
        } else {
            Money(0)
        }
    }

    pub fn eur(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Self {
        Money(iter.map(|m| m.0).sum())
    }
}

/// A vehicle that may bid, with its sealed amount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidCandidate {
    pub vehicle: VehicleId,
    pub lane: LaneId,
    pub movement: MovementId,
    pub phase: PhaseId,
    pub distance_m: f64,
    pub amount: Money,
}

/// Bids a phase's wallet agent submits.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTender {
    pub phase: PhaseId,
    pub total: Money,
    /// Summed queue over the phase's active lanes; first tie-breaker.
    pub queue: usize,
    pub bidders: Vec<(VehicleId, Money)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionResult {
    pub winner: PhaseId,
    pub runner_up: Option<PhaseId>,
    pub totals: Vec<(PhaseId, Money)>,
    pub payments: Vec<(VehicleId, Money)>,
}

impl AuctionResult {
    pub fn total_of(&self, phase: PhaseId) -> Option<Money> {
        self.totals.iter().find(|(p, _)| *p == phase).map(|(_, m)| *m)
    }

    pub fn revenue(&self) -> Money {
        self.payments.iter().map(|(_, m)| *m).sum()
    }
}

/// Sums the bids of every candidate inside its lane's distance whose
/// movement is active, for each bidding phase in `bidding` order.
pub fn phase_bids(
    candidates: &[BidCandidate],
    distances: &[Option<f64>],
    active: &ActiveMovements,
    bidding: &[PhaseId],
    queues: &[usize],
) -> Vec<PhaseTender> {
    bidding
        .iter()
        .map(|&phase| {
            let bidders: Vec<_> = candidates
                .iter()
                .filter(|c| c.phase == phase && active.is_active(c.movement))
                .filter(|c| matches!(distances[c.lane.index()], Some(d) if c.distance_m <= d))
                .map(|c| (c.vehicle, c.amount))
                .collect();
            PhaseTender {
                phase,
                total: bidders.iter().map(|(_, m)| *m).sum(),
                queue: queues[phase.index()],
                bidders,
            }
        })
        .collect()
}

/// Ranking of tenders: larger total, then larger queue, then lower phase id.
fn rank(a: &PhaseTender, b: &PhaseTender) -> Ordering {
    b.total
        .cmp(&a.total)
        .then(b.queue.cmp(&a.queue))
        .then(a.phase.cmp(&b.phase))
}

/// Picks the winner and runner-up and prices the winner's bidders at
/// `b * c_Z / c_W`. Returns `None` when no phase bids.
pub fn run_auction(tenders: &[PhaseTender]) -> Option<AuctionResult> {
    let mut order: Vec<&PhaseTender> = tenders.iter().collect();
    order.sort_by(|a, b| rank(a, b));
    let winner = *order.first()?;
    let runner_up = order.get(1).copied();
    let payments = match runner_up {
        Some(z) if winner.total.0 > 0 => second_price(&winner.bidders, winner.total, z.total),
        _ => winner.bidders.iter().map(|(v, _)| (*v, Money::ZERO)).collect(),
    };
    Some(AuctionResult {
        winner: winner.phase,
        runner_up: runner_up.map(|z| z.phase),
        totals: tenders.iter().map(|t| (t.phase, t.total)).collect(),
        payments,
    })
}

/// Scales each bid by `price / total`, flooring, then hands the leftover
/// micro-euros to the largest remainders (earlier bidders first on ties).
fn second_price(bidders: &[(VehicleId, Money)], total: Money, price: Money) -> Vec<(VehicleId, Money)> {
    let w = total.0 as u128;
    let z = price.0 as u128;
    let mut shares: Vec<(u128, u128)> = bidders
        .iter()
        .map(|(_, b)| {
            let num = b.0 as u128 * z;
            (num / w, num % w)
        })
        .collect();
    let assigned: u128 = shares.iter().map(|s| s.0).sum();
    let leftover = (z - assigned) as usize;
    let mut by_remainder: Vec<usize> = (0..shares.len()).collect();
    by_remainder.sort_by(|&a, &b| shares[b].1.cmp(&shares[a].1).then(a.cmp(&b)));
    for &i in by_remainder.iter().take(leftover) {
        shares[i].0 += 1;
    }
    bidders
        .iter()
        .zip(shares)
        .map(|((v, _), (q, _))| (*v, Money(q as u64)))
        .collect()
}
