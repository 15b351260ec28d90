//! Road-user bids.

use crate::sim::vehicle::UserProfile;

/// Logistic impatience multiplier in (0, 1), rising with waiting time.
pub fn impatience(waited_s: f64, slope: f64, midpoint_s: f64) -> f64 {
    1.0 / (1.0 + (-slope * (waited_s - midpoint_s)).exp())
}

/// Value of the time already spent waiting, inflated by impatience.
pub fn vehicle_bid(vot_eur_per_hr: f64, waited_s: f64, impatience: f64) -> f64 {
    vot_eur_per_hr / 3600.0 * waited_s * (1.0 + impatience)
}

/// How a road user turns waiting time into a bid (EUR).
pub trait BidModel: Send + Sync {
    fn bid(&self, profile: &UserProfile, waited_s: f64) -> f64;
}

/// Default bid: `VOT/3600 * w * (1 + P(w))` with logistic `P`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpatienceBid;

impl BidModel for ImpatienceBid {
    fn bid(&self, profile: &UserProfile, waited_s: f64) -> f64 {
        let p = impatience(waited_s, profile.impatience_slope, profile.impatience_midpoint_s);
        vehicle_bid(profile.vot_eur_per_hr, waited_s, p)
    }
}
