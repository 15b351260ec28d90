//! Brute-force second-price auction used to cross-check the market code.

use gatesim::auction::{BidModel, ImpatienceBid, Money};
use gatesim::scenario::{LaneId, MovementId, PhaseId};
use gatesim::sim::{UserProfile, VehicleId};
use rand::Rng;

/// Raw state of one vehicle in a random instance.
#[derive(Debug, Clone)]
pub struct RawVehicle {
    pub id: VehicleId,
    pub lane: LaneId,
    pub movement: MovementId,
    pub phase: PhaseId,
    pub distance_m: f64,
    pub waited_s: f64,
    pub profile: UserProfile,
}

impl RawVehicle {
    pub fn bid(&self) -> Money {
        Money::from_eur(ImpatienceBid.bid(&self.profile, self.waited_s))
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub phases: Vec<PhaseId>,
    /// Movements of each phase, two per phase.
    pub movements: Vec<[MovementId; 2]>,
    pub excluded: Vec<MovementId>,
    /// Lane distances; `None` when the lane does not bid.
    pub lane_distance: Vec<Option<f64>>,
    pub queues: Vec<usize>,
    pub vehicles: Vec<RawVehicle>,
}

pub struct OracleResult {
    pub winner: PhaseId,
    pub runner_up: Option<PhaseId>,
    pub totals: Vec<(PhaseId, u64)>,
    /// Payments of the winner's bidders, sorted by vehicle id.
    pub payments: Vec<(VehicleId, u64)>,
}

/// Random instance with up to 4 phases, 2 lanes per movement and up to 20 vehicles.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let n_phases = rng.random_range(1..=4usize);
    let phases: Vec<PhaseId> = (1..=n_phases as u8).map(PhaseId).collect();
    let movements: Vec<[MovementId; 2]> = (0..n_phases as u8)
        .map(|p| [MovementId(2 * p + 1), MovementId(2 * p + 2)])
        .collect();
    let excluded = movements
        .iter()
        .flatten()
        .copied()
        .filter(|_| rng.random_bool(0.15))
        .collect();
    let lanes = n_phases * 4;
    let lane_distance = (0..lanes)
        .map(|_| rng.random_bool(0.9).then(|| rng.random_range(5.0..25.0)))
        .collect();
    let queues = (0..n_phases).map(|_| rng.random_range(0..6)).collect();
    let n_vehicles = rng.random_range(0..=20u32);
    let vehicles = (0..n_vehicles)
        .map(|i| {
            let lane = rng.random_range(0..lanes);
            let p = lane / 4;
            let movement = movements[p][(lane % 4) / 2];
            // a few exact duplicates of wait produce tied bids
            let waited_s = if rng.random_bool(0.2) {
                30.0
            } else {
                rng.random_range(0.0..180.0)
            };
            RawVehicle {
                id: VehicleId(i),
                lane: LaneId(lane as u16),
                movement,
                phase: phases[p],
                distance_m: rng.random_range(0.0..30.0),
                waited_s,
                profile: UserProfile {
                    vot_eur_per_hr: rng.random_range(20.0..40.0),
                    impatience_slope: rng.random_range(0.1..0.5),
                    impatience_midpoint_s: rng.random_range(20.0..60.0),
                },
            }
        })
        .collect();
    Instance {
        phases,
        movements,
        excluded,
        lane_distance,
        queues,
        vehicles,
    }
}

fn eligible(inst: &Instance, v: &RawVehicle) -> bool {
    !inst.excluded.contains(&v.movement)
        && matches!(inst.lane_distance[v.lane.0 as usize], Some(d) if v.distance_m <= d)
}

/// Recomputes the auction from raw vehicle states. `scale` multiplies
/// every bid.
pub fn brute_force(inst: &Instance, scale: u64) -> OracleResult {
    let bid = |v: &RawVehicle| v.bid().0 * scale;
    let totals: Vec<(PhaseId, u64)> = inst
        .phases
        .iter()
        .map(|&p| {
            let mut sum = 0u64;
            for v in &inst.vehicles {
                if v.phase == p && eligible(inst, v) {
                    sum += bid(v);
                }
            }
            (p, sum)
        })
        .collect();
    // better(a, b): a outranks b
    let better = |a: usize, b: usize| {
        let (ta, tb) = (totals[a].1, totals[b].1);
        if ta != tb {
            return ta > tb;
        }
        let (qa, qb) = (inst.queues[a], inst.queues[b]);
        if qa != qb {
            return qa > qb;
        }
        totals[a].0 < totals[b].0
    };
    let mut w = 0;
    for i in 1..totals.len() {
        if better(i, w) {
            w = i;
        }
    }
    let mut z: Option<usize> = None;
    for i in 0..totals.len() {
        if i != w && z.is_none_or(|z| better(i, z)) {
            z = Some(i);
        }
    }
    let winner = totals[w].0;
    let c_w = totals[w].1;
    let bidders: Vec<&RawVehicle> = inst
        .vehicles
        .iter()
        .filter(|v| v.phase == winner && eligible(inst, v))
        .collect();
    let mut payments: Vec<(VehicleId, u64)> = match z {
        Some(z) if c_w > 0 => {
            let c_z = totals[z].1;
            let exact: Vec<(u128, u128)> = bidders
                .iter()
                .map(|v| {
                    let n = bid(v) as u128 * c_z as u128;
                    (n / c_w as u128, n % c_w as u128)
                })
                .collect();
            let mut pay: Vec<u128> = exact.iter().map(|e| e.0).collect();
            let mut leftover = c_z as u128 - pay.iter().sum::<u128>();
            let mut given = vec![false; pay.len()];
            while leftover > 0 {
                let mut best: Option<usize> = None;
                for i in 0..pay.len() {
                    if !given[i] && best.is_none_or(|b| exact[i].1 > exact[b].1) {
                        best = Some(i);
                    }
                }
                let b = best.expect("leftover never exceeds bidder count");
                given[b] = true;
                pay[b] += 1;
                leftover -= 1;
            }
            bidders.iter().zip(pay).map(|(v, p)| (v.id, p as u64)).collect()
        }
        _ => bidders.iter().map(|v| (v.id, 0)).collect(),
    };
    payments.sort_by_key(|p| p.0);
    OracleResult {
        winner,
        runner_up: z.map(|z| totals[z].0),
        totals,
        payments,
    }
}
