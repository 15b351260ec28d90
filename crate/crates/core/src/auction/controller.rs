//! Auction-driven signal controller.
//!
//! A decision is taken whenever the granted green runs out. A new winner
//! gets `yellow_s` of yellow on the outgoing phase followed by `min_green_s`
//! of green; a repeat winner is extended by `extension_s`. A phase whose
//! green would exceed `max_green_s` after an extension is barred from the
//! next auction. Movements removed by metering while green get their own
//! yellow clearance and then stay red.

use crate::metering::ActiveMovements;
use crate::scenario::{ControllerParams, IntersectionModel, LaneId, MovementId, PhaseId};
use crate::signal::{Indication, Indications};
use crate::sim::events::{Event, EventLog};
use crate::sim::traffic::TrafficState;

use super::bid::BidModel;
use super::distance::{bidding_distance_factors, bidding_distances, DistanceParams, LaneView};
use super::market::{phase_bids, run_auction, AuctionResult, BidCandidate, Money};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Green { remaining: u32 },
    Yellow { remaining: u32, next: PhaseId },
}

/// Static phase layout the signal state machine works against.
#[derive(Debug, Clone)]
pub struct PhasePlan {
    pub phases: Vec<Vec<MovementId>>,
    pub min_green_s: u32,
    pub max_green_s: u32,
    pub extension_s: u32,
    pub yellow_s: u32,
}

impl PhasePlan {
    pub fn new(model: &IntersectionModel, params: &ControllerParams) -> Self {
        Self {
            phases: model.phases.iter().map(|p| p.movements.clone()).collect(),
            min_green_s: params.min_green_s,
            max_green_s: params.max_green_s,
            extension_s: params.extension_s,
            yellow_s: params.yellow_s,
        }
    }

    fn movements(&self, phase: PhaseId) -> &[MovementId] {
        &self.phases[phase.index()]
    }

    fn movement_count(&self) -> usize {
        self.phases.iter().map(|p| p.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    pub active_phase: Option<PhaseId>,
    /// Green granted to each phase in its current run; zero when red.
    pub elapsed_green: Vec<u32>,
    pub indications: Indications,
    /// Phases allowed to bid.
    pub eligible: Vec<bool>,
    pub stage: Stage,
    /// Raw lane distances carried by the active phase.
    pub carried: Vec<Option<f64>>,
    clearance: Vec<u32>,
}

impl SignalState {
    pub fn new(plan: &PhasePlan, lanes: usize) -> Self {
        Self {
            active_phase: None,
            elapsed_green: vec![0; plan.phases.len()],
            indications: Indications::all_red(plan.movement_count()),
            eligible: vec![true; plan.phases.len()],
            stage: Stage::Green { remaining: 0 },
            carried: vec![None; lanes],
            clearance: vec![0; plan.movement_count()],
        }
    }

    pub fn bidding_phases(&self) -> Vec<PhaseId> {
        let phases: Vec<PhaseId> = (0..self.eligible.len())
            .filter(|&i| self.eligible[i])
            .map(|i| PhaseId(i as u8 + 1))
            .collect();
        if phases.is_empty() {
            (0..self.eligible.len()).map(|i| PhaseId(i as u8 + 1)).collect()
        } else {
            phases
        }
    }

    /// Consumes one tick and prepares the indications of tick `t + 1`.
    /// Returns true when the granted green has run out and an auction is due.
    pub fn tick(&mut self, t: u32, plan: &PhasePlan, active: &ActiveMovements, log: &mut EventLog) -> bool {
        let next = t + 1;
        for i in 0..self.clearance.len() {
            if self.clearance[i] > 0 {
                self.clearance[i] -= 1;
                if self.clearance[i] == 0 {
                    self.indications
                        .set(MovementId(i as u8 + 1), Indication::Red, next, log);
                }
            }
        }
        self.cut_excluded(plan, active, next, log);
        match self.stage {
            Stage::Yellow { remaining, next: phase } => {
                let remaining = remaining.saturating_sub(1);
                if remaining == 0 {
                    self.start_green(phase, plan, active, next, log);
                } else {
                    self.stage = Stage::Yellow { remaining, next: phase };
                }
                false
            }
            Stage::Green { remaining } => {
                let remaining = remaining.saturating_sub(1);
                self.stage = Stage::Green { remaining };
                remaining == 0
            }
        }
    }

    /// Green movements that left the active set go through yellow to red.
    fn cut_excluded(&mut self, plan: &PhasePlan, active: &ActiveMovements, next: u32, log: &mut EventLog) {
        for i in 0..self.clearance.len() {
            let m = MovementId(i as u8 + 1);
            if self.indications.get(m) == Indication::Green && !active.is_active(m) {
                self.indications.set(m, Indication::Yellow, next, log);
                self.clearance[i] = plan.yellow_s;
            }
        }
    }

    fn start_green(
        &mut self,
        phase: PhaseId,
        plan: &PhasePlan,
        active: &ActiveMovements,
        next: u32,
        log: &mut EventLog,
    ) {
        if let Some(old) = self.active_phase {
            for &m in plan.movements(old) {
                self.clearance[m.index()] = 0;
                self.indications.set(m, Indication::Red, next, log);
            }
        }
        for &m in plan.movements(phase) {
            if active.is_active(m) && self.clearance[m.index()] == 0 {
                self.indications.set(m, Indication::Green, next, log);
            }
        }
        self.active_phase = Some(phase);
        self.elapsed_green[phase.index()] = plan.min_green_s;
        self.stage = Stage::Green {
            remaining: plan.min_green_s,
        };
    }

    /// Applies an auction outcome; new indications show from tick `effective`.
    #[allow(clippy::too_many_arguments)]
    pub fn apply_decision(
        &mut self,
        winner: PhaseId,
        raw_distances: &[Option<f64>],
        lane_phase: &[PhaseId],
        plan: &PhasePlan,
        active: &ActiveMovements,
        effective: u32,
        log: &mut EventLog,
    ) {
        let next = effective;
        match self.active_phase {
            Some(current) if current == winner => {
                let e = &mut self.elapsed_green[winner.index()];
                *e += plan.extension_s;
                let barred = *e > plan.max_green_s;
                self.stage = Stage::Green {
                    remaining: plan.extension_s,
                };
                for &m in plan.movements(winner) {
                    if active.is_active(m) && self.clearance[m.index()] == 0 {
                        self.indications.set(m, Indication::Green, next, log);
                    }
                }
                if barred {
                    self.eligible.iter_mut().for_each(|e| *e = true);
                    self.eligible[winner.index()] = false;
                }
            }
            current => {
                self.eligible.iter_mut().for_each(|e| *e = true);
                for (c, (&d, &p)) in self.carried.iter_mut().zip(raw_distances.iter().zip(lane_phase)) {
                    *c = if p == winner { d } else { None };
                }
                match current {
                    Some(old) => {
                        for &m in plan.movements(old) {
                            if self.indications.get(m) == Indication::Green {
                                self.indications.set(m, Indication::Yellow, next, log);
                            }
                        }
                        self.elapsed_green[old.index()] = 0;
                        self.stage = Stage::Yellow {
                            remaining: plan.yellow_s,
                            next: winner,
                        };
                    }
                    None => self.start_green(winner, plan, active, next, log),
                }
            }
        }
    }
}

/// The auction-based controller for one intersection.
pub struct AuctionController {
    plan: PhasePlan,
    distance_params: DistanceParams,
    lane_phase: Vec<PhaseId>,
    lane_movement: Vec<MovementId>,
    state: SignalState,
    bid_model: Box<dyn BidModel>,
    trace: bool,
    revenue: Money,
    auctions: u32,
}

impl AuctionController {
    pub fn new(
        model: &IntersectionModel,
        params: &ControllerParams,
        bid_model: Box<dyn BidModel>,
        trace: bool,
    ) -> Self {
        let plan = PhasePlan::new(model, params);
        Self {
            state: SignalState::new(&plan, model.lanes.len()),
            plan,
            distance_params: params.into(),
            lane_phase: model.lanes.iter().map(|l| model.phase_of(l.movement)).collect(),
            lane_movement: model.lanes.iter().map(|l| l.movement).collect(),
            bid_model,
            trace,
            revenue: Money::ZERO,
            auctions: 0,
        }
    }

    pub fn state(&self) -> &SignalState {
        &self.state
    }

    pub fn indications(&self) -> &Indications {
        &self.state.indications
    }

    pub fn revenue(&self) -> Money {
        self.revenue
    }

    pub fn auctions(&self) -> u32 {
        self.auctions
    }

    /// First decision, producing the indications of tick 0.
    pub fn initialize(&mut self, traffic: &TrafficState, active: &ActiveMovements, log: &mut EventLog) {
        // decision "at the end of tick -1"
        self.decide_at(0, None, traffic, active, log);
    }

    pub fn step(&mut self, t: u32, traffic: &TrafficState, active: &ActiveMovements, log: &mut EventLog) {
        if self.state.tick(t, &self.plan, active, log) {
            self.decide_at(t + 1, Some(t), traffic, active, log);
        }
    }

    fn decide_at(
        &mut self,
        next: u32,
        decided: Option<u32>,
        traffic: &TrafficState,
        active: &ActiveMovements,
        log: &mut EventLog,
    ) {
        let now = decided.unwrap_or(0);
        let (result, raw) = self.auction(now, traffic, active);
        if self.trace {
            log.push(Event::Auction {
                t: now,
                winner: result.winner,
                runner_up: result.runner_up,
                totals_micro_eur: result.totals.iter().map(|(p, m)| (*p, m.0)).collect(),
                payments_micro_eur: result.revenue().0,
                bidders: result.payments.len(),
                distances_m: raw.1.clone(),
            });
        }
        self.revenue = Money(self.revenue.0 + result.revenue().0);
        self.auctions += 1;
        self.state
            .apply_decision(result.winner, &raw.0, &self.lane_phase, &self.plan, active, next, log);
    }

    /// Runs one auction on the traffic state at tick `t`. Returns the result
    /// with the raw and final lane distances.
    #[allow(clippy::type_complexity)]
    pub fn auction(
        &self,
        t: u32,
        traffic: &TrafficState,
        active: &ActiveMovements,
    ) -> (AuctionResult, (Vec<Option<f64>>, Vec<Option<f64>>)) {
        let bidding = self.state.bidding_phases();
        let mut bidding_mask = vec![false; self.plan.phases.len()];
        for p in &bidding {
            bidding_mask[p.index()] = true;
        }
        let views: Vec<LaneView> = traffic
            .lanes()
            .iter()
            .enumerate()
            .map(|(i, l)| LaneView {
                phase: self.lane_phase[i],
                active: active.is_active(self.lane_movement[i]),
                queue_len: l.queue_len(),
                total_wait_s: l.total_wait(t) as f64,
            })
            .collect();
        let z = bidding_distance_factors(&views, &bidding_mask, &self.state.elapsed_green);
        let d = bidding_distances(
            &views,
            &z,
            &bidding_mask,
            &self.state.elapsed_green,
            &self.state.carried,
            &self.distance_params,
        );

        let mut candidates = Vec::new();
        let mut queues = vec![0usize; self.plan.phases.len()];
        for (i, dist) in d.distances.iter().enumerate() {
            let Some(dist) = *dist else { continue };
            queues[self.lane_phase[i].index()] += views[i].queue_len;
            for (vehicle, x) in traffic.vehicles_within(LaneId(i as u16), dist, t) {
                let v = traffic.vehicle(vehicle);
                let waited = v.waiting_time(t) as f64;
                candidates.push(BidCandidate {
                    vehicle,
                    lane: v.lane,
                    movement: v.movement,
                    phase: self.lane_phase[i],
                    distance_m: x,
                    amount: Money::from_eur(self.bid_model.bid(&v.profile, waited)),
                });
            }
        }
        let tenders = phase_bids(&candidates, &d.distances, active, &bidding, &queues);
        let result = run_auction(&tenders).expect("at least one bidding phase");
        (result, (d.raw, d.distances))
    }
}
