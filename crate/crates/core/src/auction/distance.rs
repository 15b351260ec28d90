//! Bidding distances: how far upstream of the stop line vehicles of each
//! lane may take part in the auction.

use crate::scenario::{BidDistanceMode, ControllerParams, PhaseId};

/// What the distance calculation needs to know about one lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneView {
    pub phase: PhaseId,
    /// Whether the lane's movement is in the phase's active movement set.
    pub active: bool,
    pub queue_len: usize,
    pub total_wait_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceParams {
    pub min_green_s: u32,
    pub headway_s: u32,
    pub min_vehicle_length_m: f64,
    pub max_vehicle_length_m: f64,
    pub mode: BidDistanceMode,
}

impl From<&ControllerParams> for DistanceParams {
    fn from(p: &ControllerParams) -> Self {
        Self {
            min_green_s: p.min_green_s,
            headway_s: p.saturation_headway_s,
            min_vehicle_length_m: p.min_vehicle_length_m,
            max_vehicle_length_m: p.max_vehicle_length_m,
            mode: p.bid_distance_mode,
        }
    }
}

/// Per-lane distances from one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BidDistances {
    /// Lane distances before the per-phase normalisation; carried by the
    /// winning phase into its extensions.
    pub raw: Vec<Option<f64>>,
    /// Final distances; `None` for lanes that do not bid.
    pub distances: Vec<Option<f64>>,
}

fn bids(lane: &LaneView, bidding: &[bool]) -> bool {
    lane.active && bidding[lane.phase.index()]
}

/// Mean waiting time of each active lane of a red bidding phase; zero for
/// empty lanes and for every lane that is skipped.
pub fn bidding_distance_factors(lanes: &[LaneView], bidding: &[bool], elapsed: &[u32]) -> Vec<f64> {
    lanes
        .iter()
        .map(|l| {
            if !bids(l, bidding) || elapsed[l.phase.index()] > 0 {
                0.0
            } else if l.queue_len > 0 {
                l.total_wait_s / l.queue_len as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Lane bidding distances. The active phase reuses `carried`; red phases
/// interpolate between `|lanes| * min_len` and `(min_green / headway) * max_len`
/// by their share of `z`. Every distance is at least one vehicle length.
pub fn bidding_distances(
    lanes: &[LaneView],
    z: &[f64],
    bidding: &[bool],
    elapsed: &[u32],
    carried: &[Option<f64>],
    params: &DistanceParams,
) -> BidDistances {
    let phases = bidding.len();
    let mut active_lanes = vec![0usize; phases];
    for l in lanes.iter().filter(|l| bids(l, bidding)) {
        active_lanes[l.phase.index()] += 1;
    }
    let z_sum: f64 = lanes
        .iter()
        .zip(z)
        .filter(|(l, _)| bids(l, bidding))
        .map(|(_, &z)| z)
        .sum();

    let d_max = params.min_green_s as f64 / params.headway_s as f64 * params.max_vehicle_length_m;
    let mut raw = vec![None; lanes.len()];
    for (i, l) in lanes.iter().enumerate() {
        if !bids(l, bidding) {
            continue;
        }
        let p = l.phase.index();
        let d_min = active_lanes[p] as f64 * params.min_vehicle_length_m;
        let red_distance = || {
            let upper = d_max.max(d_min);
            if z_sum > 0.0 {
                d_min + (upper - d_min) * z[i] / z_sum
            } else {
                d_min
            }
        };
        raw[i] = Some(if elapsed[p] > 0 {
            carried[i].unwrap_or_else(red_distance)
        } else {
            red_distance()
        });
    }

    let mut phase_max = vec![f64::NEG_INFINITY; phases];
    for (l, d) in lanes.iter().zip(&raw) {
        if let Some(d) = d {
            let m = &mut phase_max[l.phase.index()];
            *m = m.max(*d);
        }
    }
    let distances = lanes
        .iter()
        .zip(&raw)
        .map(|(l, d)| {
            d.map(|_| {
                let p = l.phase.index();
                let d = match params.mode {
                    BidDistanceMode::Literal => phase_max[p] / active_lanes[p] as f64,
                    BidDistanceMode::Prose => phase_max[p],
                };
                d.max(params.min_vehicle_length_m)
            })
        })
        .collect();
    BidDistances { raw, distances }
}
