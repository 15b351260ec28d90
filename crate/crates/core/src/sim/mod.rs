//! Desk-scale traffic model: arrivals, point queues and the event log.

pub mod arrivals;
pub mod events;
pub mod traffic;
pub mod vehicle;

pub use arrivals::{generate_arrivals, sample_turn, ArrivalProcess};
pub use events::{Event, EventLog};
pub use traffic::{Crossing, LaneState, TrafficState};
pub use vehicle::{vehicle_delay, UserProfile, Vehicle, VehicleId, VehicleState};
