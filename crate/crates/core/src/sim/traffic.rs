//! Point-queue lane dynamics advanced in one-second ticks.
//!
//! Vehicles enter their lane at the upstream end, travel at free-flow speed
//! and stack in a vertical queue at the stop line. Under green the queue head
//! departs every `headway` seconds, tracked by a per-lane accumulator that
//! restarts at every green onset.

use std::collections::VecDeque;

use crate::scenario::{Arm, IntersectionModel, LaneId, MovementId};
use crate::signal::Indications;

use super::events::{Event, EventLog};
use super::vehicle::{Vehicle, VehicleId, VehicleState};

const ARRIVAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LaneState {
    pub id: LaneId,
    pub arm: Arm,
    pub movement: MovementId,
    pub length_m: f64,
    pub speed_mps: f64,
    travel_ticks: u32,
    capacity: usize,
    blocked: VecDeque<VehicleId>,
    approaching: VecDeque<VehicleId>,
    queue: VecDeque<VehicleId>,
    join_sum: u64,
    accumulator: u32,
    pub arrivals: u32,
    pub exits: u32,
}

impl LaneState {
    fn new(lane: &crate::scenario::Lane, min_spacing_m: f64) -> Self {
        let speed = lane.speed_mps();
        Self {
            id: lane.id,
            arm: lane.arm,
            movement: lane.movement,
            length_m: lane.length_m,
            speed_mps: speed,
            travel_ticks: (lane.length_m / speed - ARRIVAL_EPS).ceil().max(0.0) as u32,
            capacity: ((lane.length_m / min_spacing_m).floor() as usize).max(1),
            blocked: VecDeque::new(),
            approaching: VecDeque::new(),
            queue: VecDeque::new(),
            join_sum: 0,
            accumulator: 0,
            arrivals: 0,
            exits: 0,
        }
    }

    /// Number of vehicles in the stop-line queue.
    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Sum of the waiting times of the queued vehicles at tick `t`.
    pub fn total_wait(&self, t: u32) -> u64 {
        self.queue.len() as u64 * t as u64 - self.join_sum
    }

    pub fn queued(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.queue.iter().copied()
    }

    pub fn approaching(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.approaching.iter().copied()
    }

    /// Physical storage in vehicles.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Vehicles on the link itself (approaching or queued).
    pub fn occupancy(&self) -> usize {
        self.approaching.len() + self.queue.len()
    }

    /// Vehicles held upstream because the lane was full.
    pub fn blocked_len(&self) -> usize {
        self.blocked.len()
    }

    pub fn in_model(&self) -> usize {
        self.blocked.len() + self.occupancy()
    }

    pub fn approach_distance(&self, entered: u32, t: u32) -> f64 {
        (self.length_m - self.speed_mps * (t - entered) as f64).max(0.0)
    }

    pub fn free_flow_time_s(&self) -> f64 {
        self.length_m / self.speed_mps
    }
}

/// A stop-line crossing produced by one tick of traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub t: u32,
    pub vehicle: VehicleId,
    pub lane: LaneId,
    pub movement: MovementId,
}

#[derive(Debug, Clone)]
pub struct TrafficState {
    lanes: Vec<LaneState>,
    vehicles: Vec<Vehicle>,
    headway_s: u32,
    min_spacing_m: f64,
}

impl TrafficState {
    pub fn new(model: &IntersectionModel, headway_s: u32, min_spacing_m: f64) -> Self {
        Self {
            lanes: model.lanes.iter().map(|l| LaneState::new(l, min_spacing_m)).collect(),
            vehicles: Vec::new(),
            headway_s,
            min_spacing_m,
        }
    }

    pub fn lanes(&self) -> &[LaneState] {
        &self.lanes
    }

    pub fn lane(&self, id: LaneId) -> &LaneState {
        &self.lanes[id.index()]
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> &Vehicle {
        &self.vehicles[id.0 as usize]
    }

    pub fn min_spacing_m(&self) -> f64 {
        self.min_spacing_m
    }

    /// Vehicles of `lane` within `distance_m` of the stop line at tick `t`,
    /// nearest first, with their distances.
    pub fn vehicles_within(
        &self,
        lane: LaneId,
        distance_m: f64,
        t: u32,
    ) -> impl Iterator<Item = (VehicleId, f64)> + '_ {
        let state = self.lane(lane);
        let spacing = self.min_spacing_m;
        let queued = state
            .queue
            .iter()
            .enumerate()
            .map(move |(i, &id)| (id, i as f64 * spacing))
            .take_while(move |&(_, x)| x <= distance_m);
        let approaching = state
            .approaching
            .iter()
            .map(move |&id| match self.vehicle(id).state {
                VehicleState::Approaching { entered } => (id, state.approach_distance(entered, t)),
                _ => unreachable!("approaching list holds approaching vehicles"),
            })
            .take_while(move |&(_, x)| x <= distance_m);
        queued.chain(approaching)
    }

    /// Distance of a live vehicle from the stop line.
    pub fn distance_of(&self, id: VehicleId, t: u32) -> Option<f64> {
        let v = self.vehicle(id);
        let lane = self.lane(v.lane);
        match v.state {
            VehicleState::Blocked => Some(lane.length_m),
            VehicleState::Approaching { entered } => Some(lane.approach_distance(entered, t)),
            VehicleState::Queued { .. } => lane
                .queue
                .iter()
                .position(|&q| q == id)
                .map(|i| i as f64 * self.min_spacing_m),
            VehicleState::Exited { .. } => None,
        }
    }

    /// Advances one tick under `signal`, then admits `arrivals` at the lane
    /// entries. Returns the stop-line crossings of this tick.
    pub fn advance(
        &mut self,
        t: u32,
        signal: &Indications,
        arrivals: Vec<Vehicle>,
        log: &mut EventLog,
    ) -> Vec<Crossing> {
        let mut crossings = Vec::new();
        for li in 0..self.lanes.len() {
            let lane = &mut self.lanes[li];
            while let Some(&front) = lane.approaching.front() {
                let v = &mut self.vehicles[front.0 as usize];
                let VehicleState::Approaching { entered } = v.state else {
                    unreachable!()
                };
                if t < entered + lane.travel_ticks {
                    break;
                }
                lane.approaching.pop_front();
                v.state = VehicleState::Queued { joined: t };
                lane.queue.push_back(front);
                lane.join_sum += t as u64;
                log.push(Event::QueueJoin {
                    t,
                    vehicle: front,
                    lane: lane.id,
                });
            }

            if signal.is_green(lane.movement) {
                lane.accumulator = (lane.accumulator + 1).min(self.headway_s);
                if lane.accumulator >= self.headway_s {
                    if let Some(head) = lane.queue.pop_front() {
                        lane.accumulator -= self.headway_s;
                        let v = &mut self.vehicles[head.0 as usize];
                        let VehicleState::Queued { joined } = v.state else {
                            unreachable!()
                        };
                        v.state = VehicleState::Exited {
                            exit: t,
                            waited: t - joined,
                        };
                        lane.join_sum -= joined as u64;
                        lane.exits += 1;
                        log.push(Event::Cross {
                            t,
                            vehicle: head,
                            lane: lane.id,
                            movement: lane.movement,
                        });
                        crossings.push(Crossing {
                            t,
                            vehicle: head,
                            lane: lane.id,
                            movement: lane.movement,
                        });
                    }
                }
            } else {
                lane.accumulator = 0;
            }

            while lane.occupancy() < lane.capacity {
                let Some(id) = lane.blocked.pop_front() else {
                    break;
                };
                self.vehicles[id.0 as usize].state = VehicleState::Approaching { entered: t };
                lane.approaching.push_back(id);
                log.push(Event::Enter {
                    t,
                    vehicle: id,
                    lane: lane.id,
                });
            }
        }

        for mut v in arrivals {
            debug_assert_eq!(v.id.0 as usize, self.vehicles.len());
            let lane = &mut self.lanes[v.lane.index()];
            lane.arrivals += 1;
            log.push(Event::Arrive {
                t,
                vehicle: v.id,
                lane: v.lane,
                movement: v.movement,
            });
            if lane.blocked.is_empty() && lane.occupancy() < lane.capacity {
                v.state = VehicleState::Approaching { entered: t };
                lane.approaching.push_back(v.id);
            } else {
                v.state = VehicleState::Blocked;
                lane.blocked.push_back(v.id);
            }
            self.vehicles.push(v);
        }
        crossings
    }

    /// Queued vehicles on the incoming lanes of `arm`.
    pub fn arm_queue(&self, arm: Arm) -> usize {
        self.lanes.iter().filter(|l| l.arm == arm).map(|l| l.queue_len()).sum()
    }
}
