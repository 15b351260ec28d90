//! Poisson vehicle arrivals.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::scenario::{Arm, DemandSpec, IntersectionModel, LaneId, Turn, TurnShares, UniformRange};

use super::vehicle::{UserProfile, Vehicle, VehicleId, VehicleState};

/// Samples the turn of one vehicle from the turn shares.
pub fn sample_turn<R: Rng + ?Sized>(rng: &mut R, shares: &TurnShares) -> Turn {
    let u: f64 = rng.random();
    if u < shares.left {
        Turn::Left
    } else if u < shares.left + shares.through {
        Turn::Through
    } else {
        Turn::Right
    }
}

fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, range: UniformRange) -> f64 {
    if range.lo == range.hi {
        range.lo
    } else {
        rng.random_range(range.lo..=range.hi)
    }
}

/// Per-arm arrival process with cached Poisson samplers and lane tables.
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    shares: TurnShares,
    vot: UniformRange,
    slope: UniformRange,
    midpoint: UniformRange,
    arms: Vec<ArmDemand>,
    next_id: u32,
}

#[derive(Debug, Clone)]
struct ArmDemand {
    arm: Arm,
    per_second: Option<Poisson<f64>>,
    left: Option<(crate::scenario::MovementId, Vec<LaneId>)>,
    through: Option<(crate::scenario::MovementId, Vec<LaneId>)>,
}

impl ArrivalProcess {
    pub fn new(demand: &DemandSpec, model: &IntersectionModel) -> Self {
        let arms = Arm::ALL
            .iter()
            .map(|&arm| {
                let rate = demand.rate(arm) / 3600.0;
                let lanes_for = |turn| {
                    model
                        .movement_for(arm, turn)
                        .map(|m| (m, model.lanes_of_movement(m).map(|l| l.id).collect::<Vec<_>>()))
                };
                let left = lanes_for(Turn::Left);
                let through = lanes_for(Turn::Through);
                let served = left.is_some() || through.is_some();
                ArmDemand {
                    arm,
                    per_second: (rate > 0.0 && served).then(|| Poisson::new(rate).expect("positive rate")),
                    left,
                    through,
                }
            })
            .collect();
        Self {
            shares: demand.turn_shares,
            vot: demand.vot_eur_per_hr,
            slope: demand.impatience_slope,
            midpoint: demand.impatience_midpoint_s,
            arms,
            next_id: 0,
        }
    }

    /// Draws the arrivals of tick `t`, arm by arm in N, E, S, W order.
    pub fn generate<R: Rng + ?Sized>(&mut self, rng: &mut R, t: u32) -> Vec<Vehicle> {
        let mut out = Vec::new();
        for a in 0..self.arms.len() {
            let Some(dist) = self.arms[a].per_second else {
                continue;
            };
            let count = dist.sample(rng) as u64;
            for _ in 0..count {
                let turn = sample_turn(rng, &self.shares);
                let arm = &self.arms[a];
                // an arm without a left movement sends left-turners through, and vice versa
                let (movement, lanes) = match turn {
                    Turn::Left => arm.left.as_ref().or(arm.through.as_ref()),
                    Turn::Through | Turn::Right => arm.through.as_ref().or(arm.left.as_ref()),
                }
                .expect("served arm");
                let lane = lanes[rng.random_range(0..lanes.len())];
                let movement = *movement;
                let arm_id = arm.arm;
                let profile = UserProfile {
                    vot_eur_per_hr: sample_uniform(rng, self.vot),
                    impatience_slope: sample_uniform(rng, self.slope),
                    impatience_midpoint_s: sample_uniform(rng, self.midpoint),
                };
                out.push(Vehicle {
                    id: VehicleId(self.next_id),
                    arm: arm_id,
                    turn,
                    movement,
                    lane,
                    profile,
                    arrival_s: t,
                    state: VehicleState::Blocked,
                });
                self.next_id += 1;
            }
        }
        out
    }
}

/// One tick of arrivals for the whole intersection.
pub fn generate_arrivals<R: Rng + ?Sized>(rng: &mut R, process: &mut ArrivalProcess, t: u32) -> Vec<Vehicle> {
    process.generate(rng, t)
}
