use serde::Serialize;

use crate::error::SimError;
use crate::scenario::{Arm, LaneId, MovementId, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

/// Lifecycle of a simulated vehicle. Departure over the stop line is
/// instantaneous in a point queue, so there is no separate discharging state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleState {
    /// Generated but held outside a full lane.
    Blocked,
    /// Travelling toward the stop line at free-flow speed since `entered`.
    Approaching {
        entered: u32,
    },
    /// Stopped in the lane's vertical queue since `joined`.
    Queued {
        joined: u32,
    },
    Exited {
        exit: u32,
        waited: u32,
    },
}

/// Per-user bidding parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    pub vot_eur_per_hr: f64,
    pub impatience_slope: f64,
    pub impatience_midpoint_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    pub arm: Arm,
    pub turn: Turn,
    pub movement: MovementId,
    pub lane: LaneId,
    pub profile: UserProfile,
    pub arrival_s: u32,
    pub state: VehicleState,
}

impl Vehicle {
    /// Cumulative stopped time at tick `t`.
    pub fn waiting_time(&self, t: u32) -> u32 {
        match self.state {
            VehicleState::Queued { joined } => t.saturating_sub(joined),
            VehicleState::Exited { waited, .. } => waited,
            _ => 0,
        }
    }

    pub fn is_exited(&self) -> bool {
        matches!(self.state, VehicleState::Exited { .. })
    }

    pub fn exit_time(&self) -> Option<u32> {
        match self.state {
            VehicleState::Exited { exit, .. } => Some(exit),
            _ => None,
        }
    }

    pub fn speed_mps(&self, free_flow_mps: f64) -> f64 {
        match self.state {
            VehicleState::Approaching { .. } => free_flow_mps,
            _ => 0.0,
        }
    }
}

/// Time lost relative to an unimpeded traversal of the vehicle's lane.
pub fn vehicle_delay(v: &Vehicle, free_flow_time_s: f64) -> Result<f64, SimError> {
    let exit = v.exit_time().ok_or(SimError::NotExited(v.id.0))?;
    let travel = exit as f64 - v.arrival_s as f64;
    Ok((travel - free_flow_time_s).max(0.0))
}
