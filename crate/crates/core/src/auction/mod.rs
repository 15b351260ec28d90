//! Auction-based signal control: bidding distances, bids, the second-price
//! market and the signal state machine.

pub mod bid;
pub mod controller;
pub mod distance;
pub mod market;

pub use bid::{impatience, vehicle_bid, BidModel, ImpatienceBid};
pub use controller::{AuctionController, PhasePlan, SignalState, Stage};
pub use distance::{bidding_distance_factors, bidding_distances, BidDistances, DistanceParams, LaneView};
pub use market::{phase_bids, run_auction, AuctionResult, BidCandidate, Money, PhaseTender};
