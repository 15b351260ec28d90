//! Auction-based signal control with perimeter gating on a point-queue
//! intersection model, plus a volume-based fixed-time benchmark and the
//! experiment harness that compares them.

pub mod auction;
pub mod error;
pub mod fixed_time;
pub mod harness;
pub mod metering;
pub mod scenario;
pub mod signal;
pub mod sim;

pub use error::{OutputError, ScenarioError, SimError};
pub use scenario::{load_scenario, test_case, ControllerKind, ScenarioConfig};
