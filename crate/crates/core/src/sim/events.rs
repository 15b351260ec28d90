//! Append-only simulation event log, serialized as one JSON object per line.
//!
//! Every record carries `kind` and `t` (simulation second). Vehicle records
//! carry `vehicle`, `lane` and `movement`; `cross` marks the stop-line
//! crossing, which is also the vehicle's exit from the model. `signal`
//! records are effective from tick `t` onward.

use std::io::{self, Write};

use serde::Serialize;

use crate::scenario::{Arm, LaneId, MovementId, PhaseId};
use crate::signal::Indication;

use super::vehicle::VehicleId;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Arrive {
        t: u32,
        vehicle: VehicleId,
        lane: LaneId,
        movement: MovementId,
    },
    /// A vehicle held back by a full lane entered it.
    Enter {
        t: u32,
        vehicle: VehicleId,
        lane: LaneId,
    },
    QueueJoin {
        t: u32,
        vehicle: VehicleId,
        lane: LaneId,
    },
    Cross {
        t: u32,
        vehicle: VehicleId,
        lane: LaneId,
        movement: MovementId,
    },
    Signal {
        t: u32,
        movement: MovementId,
        indication: Indication,
    },
    MeteringOn {
        t: u32,
        budget: u32,
    },
    MeteringOff {
        t: u32,
    },
    Exclude {
        t: u32,
        inflow: Arm,
        count: u32,
        budget: u32,
    },
    PeriodEnd {
        t: u32,
        period: u32,
        inflow: Arm,
        budget: u32,
        delivered: u32,
    },
    PeriodReset {
        t: u32,
        period: u32,
        budget: u32,
    },
    Auction {
        t: u32,
        winner: PhaseId,
        runner_up: Option<PhaseId>,
        totals_micro_eur: Vec<(PhaseId, u64)>,
        payments_micro_eur: u64,
        bidders: usize,
        distances_m: Vec<Option<f64>>,
    },
}

impl Event {
    pub fn time(&self) -> u32 {
        match *self {
            Event::Arrive { t, .. }
            | Event::Enter { t, .. }
            | Event::QueueJoin { t, .. }
            | Event::Cross { t, .. }
            | Event::Signal { t, .. }
            | Event::MeteringOn { t, .. }
            | Event::MeteringOff { t }
            | Event::Exclude { t, .. }
            | Event::PeriodEnd { t, .. }
            | Event::PeriodReset { t, .. }
            | Event::Auction { t, .. } => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    recording: bool,
}

impl Default for EventLog {
    fn default() -> Self {
        Self::new()
    }
}

impl EventLog {
    pub fn new() -> Self {
        Self {
            events: Vec::new(),
            recording: true,
        }
    }

    /// A log that drops everything pushed to it.
    pub fn discarding() -> Self {
        Self {
            events: Vec::new(),
            recording: false,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn push(&mut self, event: Event) {
        if self.recording {
            self.events.push(event);
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
