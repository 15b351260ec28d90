//! Per-movement signal indications shared by both controllers.

use serde::{Deserialize, Serialize};

use crate::scenario::MovementId;
use crate::sim::events::{Event, EventLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indication {
    Red,
    Yellow,
    Green,
}

/// Indication of every movement, indexed by movement id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indications(Vec<Indication>);

impl Indications {
    pub fn all_red(movements: usize) -> Self {
        Self(vec![Indication::Red; movements])
    }

    pub fn get(&self, m: MovementId) -> Indication {
        self.0[m.index()]
    }

    pub fn is_green(&self, m: MovementId) -> bool {
        self.get(m) == Indication::Green
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MovementId, Indication)> + '_ {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &ind)| (MovementId(i as u8 + 1), ind))
    }

    /// Sets an indication, logging the change as effective from tick `t`.
    pub fn set(&mut self, m: MovementId, ind: Indication, t: u32, log: &mut EventLog) {
        let slot = &mut self.0[m.index()];
        if *slot != ind {
            *slot = ind;
            log.push(Event::Signal {
                t,
                movement: m,
                indication: ind,
            });
        }
    }

    /// Replaces all indications, logging every change.
    pub fn replace(&mut self, next: &Indications, t: u32, log: &mut EventLog) {
        for (m, ind) in next.iter() {
            self.set(m, ind, t, log);
        }
    }
}
