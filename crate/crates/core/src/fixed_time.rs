//! Volume-based fixed-time benchmark.
//!
//! Outside perimeter activation the cycle is split equally. During
//! activation every gated lane gets the green that turns the target inflow
//! into a share of the gated lane group's saturation flow; the green freed
//! by the gated phases goes proportionally to the other phases.

use serde::Serialize;

use crate::error::SimError;
use crate::scenario::{MovementId, PhaseId, ScenarioConfig};
use crate::signal::{Indication, Indications};
use crate::sim::events::EventLog;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanPhase {
    pub phase: PhaseId,
    pub movements: Vec<MovementId>,
    pub green_s: u32,
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedTimePlan {
    pub cycle_s: u32,
    pub yellow_s: u32,
    pub phases: Vec<PlanPhase>,
}

impl FixedTimePlan {
    pub fn movement_count(&self) -> usize {
        self.phases.iter().map(|p| p.movements.len()).sum()
    }

    pub fn green_of(&self, phase: PhaseId) -> Option<u32> {
        self.phases.iter().find(|p| p.phase == phase).map(|p| p.green_s)
    }
}

/// Green time that passes `target` veh/hr through a lane group discharging
/// `sat_flow` veh/hr, within `[min_green, max_green]`.
pub fn gated_green_time(
    target_veh_per_hr: f64,
    sat_flow_veh_per_hr: f64,
    cycle_s: u32,
    min_green_s: u32,
    max_green_s: u32,
) -> Result<u32, SimError> {
    if target_veh_per_hr < 0.0 || !target_veh_per_hr.is_finite() {
        return Err(SimError::NegativeTarget(target_veh_per_hr));
    }
    if sat_flow_veh_per_hr.is_nan() || sat_flow_veh_per_hr <= 0.0 || cycle_s == 0 {
        return Err(SimError::InfeasiblePlan(
            "saturation flow and cycle must be positive".into(),
        ));
    }
    let g = (cycle_s as f64 * target_veh_per_hr / sat_flow_veh_per_hr).round();
    let g = g.min(u32::MAX as f64) as u32;
    Ok(g.clamp(min_green_s, max_green_s.max(min_green_s)))
}

/// Splits `total` proportionally to `weights` in whole seconds, giving the
/// leftover seconds to the largest fractional parts (earlier first on ties).
fn apportion(total: u32, weights: &[u32]) -> Vec<u32> {
    let sum: u64 = weights.iter().map(|&w| w as u64).sum();
    if sum == 0 {
        let n = weights.len() as u32;
        return (0..n).map(|i| total / n + u32::from(i < total % n)).collect();
    }
    let mut parts: Vec<(u64, u64)> = weights
        .iter()
        .map(|&w| {
            let num = total as u64 * w as u64;
            (num / sum, num % sum)
        })
        .collect();
    let assigned: u64 = parts.iter().map(|p| p.0).sum();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| parts[b].1.cmp(&parts[a].1).then(a.cmp(&b)));
    for &i in order.iter().take((total as u64 - assigned) as usize) {
        parts[i].0 += 1;
    }
    parts.into_iter().map(|p| p.0 as u32).collect()
}

/// Fixed-time plan for the scenario, with or without perimeter activation.
pub fn build_fixed_plan(scenario: &ScenarioConfig, activation: bool) -> Result<FixedTimePlan, SimError> {
    let model = &scenario.intersection;
    let params = &scenario.controller;
    let cycle = params.fixed_cycle_s;
    let n = model.phases.len() as u32;
    let lost = n * params.yellow_s;
    if cycle < lost + n * params.min_green_s {
        return Err(SimError::InfeasiblePlan(format!(
            "cycle {cycle} s cannot hold {n} phases of {} s green and {} s yellow",
            params.min_green_s, params.yellow_s
        )));
    }
    let gated: Vec<bool> = model
        .phases
        .iter()
        .map(|p| p.movements.iter().any(|&m| model.inflow_of(m).is_some()))
        .collect();
    let base = apportion(cycle - lost, &vec![1; n as usize]);
    let limit = scenario.metering.limit_veh_per_hr;
    let greens = match limit {
        Some(limit) if activation && gated.iter().any(|&g| g) => {
            let gated_lanes = model
                .lanes
                .iter()
                .filter(|l| model.inflow_of(l.movement).is_some())
                .count();
            let sat_flow = gated_lanes as f64 * 3600.0 / params.saturation_headway_s as f64;
            let target = limit as f64 * model.inflows.len() as f64;
            let n_gated = gated.iter().filter(|&&g| g).count() as u32;
            let others = n - n_gated;
            let max_green = (cycle - lost - others * params.min_green_s) / n_gated;
            let g = gated_green_time(target, sat_flow, cycle, params.min_green_s, max_green)?;
            let free = cycle - lost - n_gated * g;
            let weights: Vec<u32> = base
                .iter()
                .zip(&gated)
                .filter(|(_, &is_gated)| !is_gated)
                .map(|(&b, _)| b)
                .collect();
            let mut shares = apportion(free, &weights).into_iter();
            gated
                .iter()
                .map(|&is_gated| if is_gated { g } else { shares.next().unwrap_or(0) })
                .collect()
        }
        _ => base,
    };
    let plan = FixedTimePlan {
        cycle_s: cycle,
        yellow_s: params.yellow_s,
        phases: model
            .phases
            .iter()
            .zip(greens)
            .zip(&gated)
            .map(|((p, green_s), &gated)| PlanPhase {
                phase: p.id,
                movements: p.movements.clone(),
                green_s,
                gated,
            })
            .collect(),
    };
    if plan.phases.iter().any(|p| p.green_s < params.min_green_s) {
        return Err(SimError::InfeasiblePlan("a green falls below the minimum".into()));
    }
    Ok(plan)
}

/// Indications at cycle position `t mod C`.
pub fn fixed_time_step(plan: &FixedTimePlan, t: u32) -> Indications {
    let mut out = Indications::all_red(plan.movement_count());
    let pos = t % plan.cycle_s;
    let mut start = 0;
    let mut sink = EventLog::new();
    for p in &plan.phases {
        let green_end = start + p.green_s;
        let yellow_end = green_end + plan.yellow_s;
        let ind = if pos < start {
            None
        } else if pos < green_end {
            Some(Indication::Green)
        } else if pos < yellow_end {
            Some(Indication::Yellow)
        } else {
            None
        };
        if let Some(ind) = ind {
            for &m in &p.movements {
                out.set(m, ind, t, &mut sink);
            }
            break;
        }
        start = yellow_end;
    }
    out
}

/// Runs the base plan, switching to the activation plan for every cycle
/// that starts inside the metering window.
#[derive(Debug, Clone)]
pub struct FixedTimeController {
    base: FixedTimePlan,
    gated: Option<FixedTimePlan>,
    window: (u32, u32),
    indications: Indications,
}

impl FixedTimeController {
    pub fn new(scenario: &ScenarioConfig) -> Result<Self, SimError> {
        let base = build_fixed_plan(scenario, false)?;
        let metered = scenario.metering.limit_veh_per_hr.is_some() && !scenario.intersection.inflows.is_empty();
        let gated = if metered {
            Some(build_fixed_plan(scenario, true)?)
        } else {
            None
        };
        Ok(Self {
            indications: Indications::all_red(base.movement_count()),
            base,
            gated,
            window: (scenario.metering.start_s, scenario.metering.end_s),
        })
    }

    pub fn base_plan(&self) -> &FixedTimePlan {
        &self.base
    }

    pub fn activation_plan(&self) -> Option<&FixedTimePlan> {
        self.gated.as_ref()
    }

    /// Plan in force at tick `t`.
    pub fn plan_at(&self, t: u32) -> &FixedTimePlan {
        let cycle_start = t - t % self.base.cycle_s;
        match &self.gated {
            Some(g) if cycle_start >= self.window.0 && cycle_start < self.window.1 => g,
            _ => &self.base,
        }
    }

    pub fn indications(&self) -> &Indications {
        &self.indications
    }

    pub fn initialize(&mut self, log: &mut EventLog) {
        let next = fixed_time_step(self.plan_at(0), 0);
        self.indications.replace(&next, 0, log);
    }

    /// Sets the indications of tick `t + 1`.
    pub fn step(&mut self, t: u32, log: &mut EventLog) {
        let next = fixed_time_step(self.plan_at(t + 1), t + 1);
        self.indications.replace(&next, t + 1, log);
    }
}
