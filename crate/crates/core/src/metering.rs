//! Per-inflow budget metering for perimeter control.
//!
//! While the activation window `[start, end)` is open, stop-line crossings of
//! gated movements are counted per budget period. Once an inflow's count
//! exceeds its budget, its gated movements leave the active movement sets
//! until the period resets.
//!
//! Within a tick the simulation calls [`Metering::begin_tick`] (period reset),
//! then records crossings, then [`Metering::enforce_budget`], then runs the
//! controller, and finally [`Metering::end_tick`] to advance the countdown.

use serde::Serialize;

use crate::error::SimError;
use crate::scenario::{Arm, IntersectionModel, MeteringSpec, MovementId};
use crate::sim::events::{Event, EventLog};

/// Live metering state.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetState {
    pub active: bool,
    pub period: u32,
    /// Seconds left in the current period.
    pub countdown: u32,
    pub counts: Vec<u32>,
    pub budgets: Vec<u32>,
    pub excluded: Vec<bool>,
}

/// Delivered count of one inflow in one budget period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodRecord {
    pub period: u32,
    pub inflow: Arm,
    pub start_s: u32,
    pub budget: u32,
    pub delivered: u32,
}

/// Movements currently allowed to bid and receive green.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveMovements {
    excluded: Vec<bool>,
}

impl ActiveMovements {
    pub fn all(movements: usize) -> Self {
        Self {
            excluded: vec![false; movements],
        }
    }

    pub fn is_active(&self, m: MovementId) -> bool {
        !self.excluded[m.index()]
    }

    pub fn exclude(&mut self, m: MovementId) {
        self.excluded[m.index()] = true;
    }
}

#[derive(Debug, Clone)]
pub struct Metering {
    spec: MeteringSpec,
    inflows: Vec<(Arm, Vec<MovementId>)>,
    movement_inflow: Vec<Option<usize>>,
    enabled: bool,
    state: BudgetState,
    active: ActiveMovements,
    history: Vec<PeriodRecord>,
}

impl Metering {
    pub fn new(spec: &MeteringSpec, model: &IntersectionModel) -> Self {
        let inflows: Vec<_> = model.inflows.iter().map(|g| (g.arm, g.movements.clone())).collect();
        let movement_inflow = model.movements.iter().map(|m| model.inflow_of(m.id)).collect();
        let n = inflows.len();
        Self {
            spec: spec.clone(),
            enabled: spec.is_enabled() && n > 0,
            inflows,
            movement_inflow,
            state: BudgetState {
                active: false,
                period: 0,
                countdown: spec.period_s,
                counts: vec![0; n],
                budgets: vec![0; n],
                excluded: vec![false; n],
            },
            active: ActiveMovements::all(model.movements.len()),
            history: Vec::new(),
        }
    }

    pub fn state(&self) -> &BudgetState {
        &self.state
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn is_active(&self) -> bool {
        self.state.active
    }

    /// Active movement sets for the next auction.
    pub fn active_movements(&self) -> &ActiveMovements {
        &self.active
    }

    /// Completed budget periods so far.
    pub fn history(&self) -> &[PeriodRecord] {
        &self.history
    }

    /// Whether `movement` uses a gated inflow.
    pub fn is_gated(&self, movement: MovementId) -> bool {
        self.movement_inflow[movement.index()].is_some()
    }

    /// Activation, deactivation and period reset, applied before traffic moves.
    pub fn begin_tick(&mut self, t: u32, log: &mut EventLog) {
        if !self.enabled {
            return;
        }
        if self.state.active {
            if t >= self.spec.end_s {
                self.close_period(t, log);
                self.state.active = false;
                self.restore();
                log.push(Event::MeteringOff { t });
            } else if self.state.countdown == 0 {
                self.reset_period(t, log);
            }
        } else if t == self.spec.start_s {
            self.state.active = true;
            self.state.period = 0;
            self.state.countdown = self.spec.period_s;
            self.load_budgets();
            self.state.counts.iter_mut().for_each(|c| *c = 0);
            self.restore();
            log.push(Event::MeteringOn {
                t,
                budget: self.state.budgets.first().copied().unwrap_or(0),
            });
        }
    }

    /// Counts one crossing of a gated-movement vehicle on inflow `inflow`.
    pub fn record_inflow_crossing(&mut self, inflow: usize, _t: u32) -> Result<(), SimError> {
        let count = self
            .state
            .counts
            .get_mut(inflow)
            .ok_or(SimError::UnknownInflow(inflow))?;
        *count += 1;
        Ok(())
    }

    /// Counts a stop-line crossing if metering is active and the movement is gated.
    pub fn record_crossing(&mut self, movement: MovementId, t: u32) {
        if !self.state.active {
            return;
        }
        if let Some(g) = self.movement_inflow[movement.index()] {
            self.record_inflow_crossing(g, t)
                .expect("movement table maps to known inflows");
        }
    }

    /// Excludes the gated movements of every inflow over budget.
    pub fn enforce_budget(&mut self, t: u32, log: &mut EventLog) -> &ActiveMovements {
        if self.state.active {
            for g in 0..self.inflows.len() {
                if !self.state.excluded[g] && self.state.counts[g] > self.state.budgets[g] {
                    self.state.excluded[g] = true;
                    for &m in &self.inflows[g].1 {
                        self.active.exclude(m);
                    }
                    log.push(Event::Exclude {
                        t,
                        inflow: self.inflows[g].0,
                        count: self.state.counts[g],
                        budget: self.state.budgets[g],
                    });
                }
            }
        }
        &self.active
    }

    pub fn end_tick(&mut self) {
        if self.state.active {
            self.state.countdown = self.state.countdown.saturating_sub(1);
        }
    }

    /// Starts the next budget period.
    pub fn reset_period(&mut self, t: u32, log: &mut EventLog) {
        self.close_period(t, log);
        self.state.period += 1;
        self.state.countdown = self.spec.period_s;
        self.state.counts.iter_mut().for_each(|c| *c = 0);
        self.load_budgets();
        self.restore();
        log.push(Event::PeriodReset {
            t,
            period: self.state.period,
            budget: self.state.budgets.first().copied().unwrap_or(0),
        });
    }

    fn close_period(&mut self, t: u32, log: &mut EventLog) {
        let start = self.spec.start_s + self.state.period * self.spec.period_s;
        for (g, (arm, _)) in self.inflows.iter().enumerate() {
            let record = PeriodRecord {
                period: self.state.period,
                inflow: *arm,
                start_s: start,
                budget: self.state.budgets[g],
                delivered: self.state.counts[g],
            };
            log.push(Event::PeriodEnd {
                t,
                period: record.period,
                inflow: record.inflow,
                budget: record.budget,
                delivered: record.delivered,
            });
            self.history.push(record);
        }
    }

    fn load_budgets(&mut self) {
        let b = self.spec.budget_for(self.state.period).unwrap_or(u32::MAX);
        self.state.budgets.iter_mut().for_each(|x| *x = b);
    }

    fn restore(&mut self) {
        self.state.excluded.iter_mut().for_each(|e| *e = false);
        self.active = ActiveMovements::all(self.movement_inflow.len());
    }
}
