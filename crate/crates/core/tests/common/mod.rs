#![allow(dead_code)]

pub mod oracle;

use gatesim::auction::{phase_bids, run_auction, AuctionResult, BidCandidate, Money};
use gatesim::metering::ActiveMovements;
use gatesim::scenario::{MovementId, ScenarioConfig};
use gatesim::signal::Indication;
use gatesim::sim::Event;

/// Indication of every movement at every tick, rebuilt from `signal` events.
pub struct Timeline {
    pub ticks: Vec<Vec<Indication>>,
}

impl Timeline {
    pub fn from_events(events: &[Event], movements: usize, horizon: u32) -> Self {
        let mut signals: Vec<(u32, MovementId, Indication)> = events
            .iter()
            .filter_map(|e| match *e {
                Event::Signal {
                    t,
                    movement,
                    indication,
                } => Some((t, movement, indication)),
                _ => None,
            })
            .collect();
        signals.sort_by_key(|s| s.0);
        let mut current = vec![Indication::Red; movements];
        let mut ticks = Vec::with_capacity(horizon as usize);
        let mut k = 0;
        for t in 0..horizon {
            while k < signals.len() && signals[k].0 <= t {
                current[signals[k].1.index()] = signals[k].2;
                k += 1;
            }
            ticks.push(current.clone());
        }
        Timeline { ticks }
    }

    pub fn at(&self, t: u32, m: MovementId) -> Indication {
        self.ticks[t as usize][m.index()]
    }
}

/// Phase index (0-based) of each movement.
pub fn movement_phase(s: &ScenarioConfig) -> Vec<usize> {
    let m = &s.intersection;
    m.movements.iter().map(|mv| m.phase_of(mv.id).index()).collect()
}

/// Phases with at least one green movement at tick `t`.
pub fn green_phases(tl: &Timeline, t: u32, phase_of: &[usize]) -> Vec<usize> {
    let mut p: Vec<usize> = tl.ticks[t as usize]
        .iter()
        .enumerate()
        .filter(|(_, &i)| i == Indication::Green)
        .map(|(m, _)| phase_of[m])
        .collect();
    p.sort_unstable();
    p.dedup();
    p
}

/// Violations of the signal-safety rules over a run: one green phase at a
/// time, exactly `yellow` s of yellow on the outgoing phase between greens
/// of different phases, every phase green run within `[min_run, max_run]`.
pub fn signal_safety_violations(
    tl: &Timeline,
    phase_of: &[usize],
    yellow: u32,
    min_run: u32,
    max_run: u32,
) -> Vec<String> {
    let mut v = Vec::new();
    let horizon = tl.ticks.len() as u32;
    // (phase, first tick, last tick) of every maximal green run
    let mut runs: Vec<(usize, u32, u32)> = Vec::new();
    for t in 0..horizon {
        let g = green_phases(tl, t, phase_of);
        if g.len() > 1 {
            v.push(format!("t={t}: phases {g:?} green together"));
        }
        if let Some(&p) = g.first() {
            match runs.last_mut() {
                Some(r) if r.0 == p && r.2 + 1 == t => r.2 = t,
                _ => runs.push((p, t, t)),
            }
        }
    }
    for w in runs.windows(2) {
        let (a, _, a_end) = w[0];
        let (b, b_start, _) = w[1];
        if a == b {
            continue;
        }
        let gap = b_start - a_end - 1;
        if gap != yellow {
            v.push(format!("t={b_start}: {gap} s between phase {a} and phase {b}"));
            continue;
        }
        for t in a_end + 1..b_start {
            let outgoing_yellow = tl.ticks[t as usize]
                .iter()
                .enumerate()
                .any(|(m, &i)| phase_of[m] == a && i == Indication::Yellow);
            if !outgoing_yellow {
                v.push(format!("t={t}: no yellow on outgoing phase {a}"));
            }
        }
    }
    for (i, &(p, start, end)) in runs.iter().enumerate() {
        let len = end - start + 1;
        // a run cut by the horizon is incomplete
        let last = i + 1 == runs.len() && end + 1 == horizon;
        if len > max_run || (len < min_run && !last) {
            v.push(format!("t={start}: phase {p} green for {len} s"));
        }
    }
    v
}

#[derive(Debug, Default)]
pub struct GatingReport {
    pub periods: usize,
    pub exceedances: usize,
    pub green_after_exceedance: Vec<String>,
    pub overshoot: Vec<String>,
    pub count_mismatch: Vec<String>,
}

/// Recounts every budget period from `cross` events and checks that no
/// gated movement is green after the count first exceeds the budget and
/// that the period total stays within the overshoot bound.
pub fn check_gating(s: &ScenarioConfig, events: &[Event], tl: &Timeline) -> GatingReport {
    let model = &s.intersection;
    let c = &s.controller;
    let gated: Vec<MovementId> = model.inflows.iter().flat_map(|g| g.movements.iter().copied()).collect();
    let gated_lanes = model.lanes.iter().filter(|l| gated.contains(&l.movement)).count() as u32;
    let slack = 1 + (c.yellow_s + c.min_green_s).div_ceil(c.saturation_headway_s) * gated_lanes;
    let m = &s.metering;
    let mut report = GatingReport::default();
    let mut z = 0;
    let mut start = m.start_s;
    while start < m.end_s {
        let end = (start + m.period_s).min(m.end_s);
        let budget = m.budget_for(z).unwrap_or(u32::MAX);
        let mut count = 0u32;
        let mut exceeded_at = None;
        for e in events {
            if let Event::Cross { t, movement, .. } = *e {
                if t >= start && t < end && gated.contains(&movement) {
                    count += 1;
                    if count > budget && exceeded_at.is_none() {
                        exceeded_at = Some(t);
                    }
                }
            }
        }
        if let Some(tx) = exceeded_at {
            report.exceedances += 1;
            for t in tx + 1..end {
                for &g in &gated {
                    if tl.at(t, g) == Indication::Green {
                        report.green_after_exceedance.push(format!(
                            "period {z}: movement {} green at t={t} (exceeded at {tx})",
                            g.0
                        ));
                    }
                }
            }
        }
        if count > budget.saturating_add(slack) {
            report.overshoot.push(format!(
                "period {z}: {count} delivered, budget {budget}, bound {}",
                budget + slack
            ));
        }
        let logged = events.iter().find_map(|e| match *e {
            Event::PeriodEnd { period, delivered, .. } if period == z => Some(delivered),
            _ => None,
        });
        if logged != Some(count) {
            report
                .count_mismatch
                .push(format!("period {z}: recount {count}, logged {logged:?}"));
        }
        report.periods += 1;
        z += 1;
        start = end;
    }
    report
}

/// Runs an oracle instance through the library's market code.
pub fn library_auction(inst: &oracle::Instance, scale: u64) -> Option<AuctionResult> {
    let mut active = ActiveMovements::all(inst.movements.len() * 2);
    for &m in &inst.excluded {
        active.exclude(m);
    }
    let candidates: Vec<BidCandidate> = inst
        .vehicles
        .iter()
        .map(|v| BidCandidate {
            vehicle: v.id,
            lane: v.lane,
            movement: v.movement,
            phase: v.phase,
            distance_m: v.distance_m,
            amount: Money(v.bid().0 * scale),
        })
        .collect();
    let tenders = phase_bids(&candidates, &inst.lane_distance, &active, &inst.phases, &inst.queues);
    run_auction(&tenders)
}
