//! Static world description: intersection geometry, demand, controller and
//! metering parameters, plus loading and validation of scenario files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;

/// Compass arm of the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    N,
    E,
    S,
    W,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::N, Arm::E, Arm::S, Arm::W];

    pub fn index(self) -> usize {
        match self {
            Arm::N => 0,
            Arm::E => 1,
            Arm::S => 2,
            Arm::W => 3,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Signal movement id, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MovementId(pub u8);

impl MovementId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

/// Signal phase id, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseId(pub u8);

impl PhaseId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Lane id, 0-based index into the model's lane list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaneId(pub u16);

impl LaneId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    Left,
    ThroughRight,
}

/// The turn a vehicle actually makes. Right-turners ride the through movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Left,
    Through,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub arm: Arm,
    pub length_m: f64,
    pub movement: MovementId,
    pub speed_kmh: f64,
}

impl Lane {
    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    pub fn free_flow_time_s(&self) -> f64 {
        self.length_m / self.speed_mps()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub id: MovementId,
    pub origin: Arm,
    pub destination: Arm,
    pub kind: TurnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub id: PhaseId,
    pub movements: Vec<MovementId>,
}

/// A gated inflow road and the movements that use it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inflow {
    pub arm: Arm,
    pub movements: Vec<MovementId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionModel {
    pub lanes: Vec<Lane>,
    pub movements: Vec<Movement>,
    pub phases: Vec<Phase>,
    #[serde(default)]
    pub inflows: Vec<Inflow>,
}

impl IntersectionModel {
    pub fn movement(&self, id: MovementId) -> &Movement {
        &self.movements[id.index()]
    }

    pub fn phase(&self, id: PhaseId) -> &Phase {
        &self.phases[id.index()]
    }

    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.index()]
    }

    pub fn phase_ids(&self) -> impl Iterator<Item = PhaseId> + '_ {
        self.phases.iter().map(|p| p.id)
    }

    /// Phase serving `movement`. Panics on an unvalidated model.
    pub fn phase_of(&self, movement: MovementId) -> PhaseId {
        self.phases
            .iter()
            .find(|p| p.movements.contains(&movement))
            .map(|p| p.id)
            .expect("validated model maps every movement to a phase")
    }

    pub fn lanes_of_movement(&self, movement: MovementId) -> impl Iterator<Item = &Lane> + '_ {
        self.lanes.iter().filter(move |l| l.movement == movement)
    }

    pub fn incoming_lanes(&self, arm: Arm) -> impl Iterator<Item = &Lane> + '_ {
        self.lanes.iter().filter(move |l| l.arm == arm)
    }

    /// Gated movements of `inflow` that belong to `phase`.
    pub fn gated_in_phase(&self, inflow: usize, phase: PhaseId) -> Vec<MovementId> {
        let p = self.phase(phase);
        self.inflows[inflow]
            .movements
            .iter()
            .copied()
            .filter(|m| p.movements.contains(m))
            .collect()
    }

    /// Movement for a vehicle arriving on `arm` making `turn`.
    pub fn movement_for(&self, arm: Arm, turn: Turn) -> Option<MovementId> {
        let kind = match turn {
            Turn::Left => TurnKind::Left,
            Turn::Through | Turn::Right => TurnKind::ThroughRight,
        };
        self.movements
            .iter()
            .find(|m| m.origin == arm && m.kind == kind)
            .map(|m| m.id)
    }

    /// Inflow index whose gated set contains `movement`.
    pub fn inflow_of(&self, movement: MovementId) -> Option<usize> {
        self.inflows.iter().position(|g| g.movements.contains(&movement))
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.movements.is_empty() || self.phases.is_empty() || self.lanes.is_empty() {
            return invalid("intersection needs at least one lane, movement and phase");
        }
        for (i, m) in self.movements.iter().enumerate() {
            if m.id.0 as usize != i + 1 {
                return invalid(format!(
                    "movement ids must be 1..={} in order, found {} at position {}",
                    self.movements.len(),
                    m.id.0,
                    i
                ));
            }
            if m.origin == m.destination {
                return invalid(format!("movement {} has origin == destination", m.id.0));
            }
        }
        for (i, p) in self.phases.iter().enumerate() {
            if p.id.0 as usize != i + 1 {
                return invalid(format!("phase ids must be 1..={} in order", self.phases.len()));
            }
            if p.movements.len() != 2 {
                return invalid(format!(
                    "phase {} must hold exactly two movements, has {}",
                    p.id,
                    p.movements.len()
                ));
            }
        }
        for m in &self.movements {
            let owners = self.phases.iter().filter(|p| p.movements.contains(&m.id)).count();
            if owners != 1 {
                return invalid(format!(
                    "movement {} must belong to exactly one phase, belongs to {}",
                    m.id.0, owners
                ));
            }
        }
        for p in &self.phases {
            for mv in &p.movements {
                if mv.0 == 0 || mv.index() >= self.movements.len() {
                    return invalid(format!("phase {} references unknown movement {}", p.id, mv.0));
                }
            }
        }
        for (i, l) in self.lanes.iter().enumerate() {
            if l.id.index() != i {
                return invalid(format!("lane ids must be 0..{} in order", self.lanes.len()));
            }
            if l.movement.0 == 0 || l.movement.index() >= self.movements.len() {
                return invalid(format!("lane {} serves unknown movement {}", i, l.movement.0));
            }
            if self.movement(l.movement).origin != l.arm {
                return invalid(format!(
                    "lane {} on arm {} serves movement {} from arm {}",
                    i,
                    l.arm,
                    l.movement.0,
                    self.movement(l.movement).origin
                ));
            }
            if l.length_m.is_nan() || l.length_m <= 0.0 || l.speed_kmh.is_nan() || l.speed_kmh <= 0.0 {
                return invalid(format!("lane {} needs positive length and speed", i));
            }
        }
        for m in &self.movements {
            if self.lanes_of_movement(m.id).next().is_none() {
                return invalid(format!("movement {} has no lane", m.id.0));
            }
        }
        let mut seen_arms = BTreeSet::new();
        for g in &self.inflows {
            if !seen_arms.insert(g.arm) {
                return invalid(format!("inflow {} listed twice", g.arm));
            }
            if g.movements.is_empty() {
                return invalid(format!("inflow {} gates no movement", g.arm));
            }
            for mv in &g.movements {
                if mv.0 == 0 || mv.index() >= self.movements.len() {
                    return invalid(format!("inflow {} gates unknown movement {}", g.arm, mv.0));
                }
                if self.movement(*mv).origin != g.arm {
                    return invalid(format!(
                        "inflow {} gates movement {} which does not originate on it",
                        g.arm, mv.0
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnShares {
    pub left: f64,
    pub through: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSpec {
    /// Arrival rate per arm, veh/hr.
    pub arrival_rate_veh_per_hr: BTreeMap<Arm, f64>,
    pub turn_shares: TurnShares,
    pub lane_capacity_veh_per_hr: f64,
    /// Value of time, EUR/hr.
    pub vot_eur_per_hr: UniformRange,
    /// Logistic slope of the impatience function.
    pub impatience_slope: UniformRange,
    /// Logistic midpoint of the impatience function, seconds of waiting.
    pub impatience_midpoint_s: UniformRange,
}

impl DemandSpec {
    pub fn rate(&self, arm: Arm) -> f64 {
        self.arrival_rate_veh_per_hr.get(&arm).copied().unwrap_or(0.0)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let s = self.turn_shares;
        if s.left < 0.0 || s.through < 0.0 || s.right < 0.0 {
            return invalid("turn shares must be nonnegative");
        }
        let sum = s.left + s.through + s.right;
        if (sum - 1.0).abs() > 1e-9 {
            return invalid(format!("turn shares must sum to 1, sum to {sum}"));
        }
        for (arm, rate) in &self.arrival_rate_veh_per_hr {
            if !(rate.is_finite() && *rate >= 0.0) {
                return invalid(format!("arrival rate on arm {arm} must be nonnegative"));
            }
        }
        if self.lane_capacity_veh_per_hr.is_nan() || self.lane_capacity_veh_per_hr < 0.0 {
            return invalid("lane capacity must be nonnegative");
        }
        for (name, r) in [
            ("vot_eur_per_hr", self.vot_eur_per_hr),
            ("impatience_slope", self.impatience_slope),
            ("impatience_midpoint_s", self.impatience_midpoint_s),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return invalid(format!("{name} bounds must be ordered (lo <= hi)"));
            }
            if r.lo < 0.0 {
                return invalid(format!("{name} must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidDistanceMode {
    /// Divide the phase maximum by the active lane count.
    #[default]
    Literal,
    /// Apply the phase maximum unchanged to every lane.
    Prose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub min_green_s: u32,
    pub max_green_s: u32,
    pub extension_s: u32,
    pub yellow_s: u32,
    pub saturation_headway_s: u32,
    pub min_vehicle_length_m: f64,
    pub max_vehicle_length_m: f64,
    #[serde(default)]
    pub bid_distance_mode: BidDistanceMode,
    /// Cycle length of the fixed-time benchmark.
    pub fixed_cycle_s: u32,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            min_green_s: 3,
            max_green_s: 60,
            extension_s: 3,
            yellow_s: 2,
            saturation_headway_s: 2,
            min_vehicle_length_m: 5.0,
            max_vehicle_length_m: 7.0,
            bid_distance_mode: BidDistanceMode::Literal,
            fixed_cycle_s: 92,
        }
    }
}

impl ControllerParams {
    fn validate(&self) -> Result<(), ScenarioError> {
        if self.min_green_s == 0
            || self.extension_s == 0
            || self.yellow_s == 0
            || self.saturation_headway_s == 0
            || self.fixed_cycle_s == 0
        {
            return invalid("controller durations must be positive integer seconds");
        }
        if self.min_green_s > self.max_green_s {
            return invalid("min_green_s must not exceed max_green_s");
        }
        if !(self.min_vehicle_length_m > 0.0 && self.min_vehicle_length_m <= self.max_vehicle_length_m) {
            return invalid("vehicle lengths must satisfy 0 < min <= max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteringSpec {
    pub start_s: u32,
    pub end_s: u32,
    pub period_s: u32,
    /// Hourly limit on each gated inflow; `None` disables metering.
    #[serde(default)]
    pub limit_veh_per_hr: Option<u32>,
    /// Optional per-period budgets (vehicles) overriding the hourly limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<u32>>,
}

impl MeteringSpec {
    /// Budget for period `z`.
    pub fn budget_for(&self, z: u32) -> Option<u32> {
        if let Some(schedule) = &self.schedule {
            if let Some(b) = schedule.get(z as usize).or(schedule.last()) {
                return Some(*b);
            }
        }
        self.limit_veh_per_hr.map(|limit| budget_count(limit, self.period_s))
    }

    pub fn is_enabled(&self) -> bool {
        self.limit_veh_per_hr.is_some() || self.schedule.as_ref().is_some_and(|s| !s.is_empty())
    }

    fn validate(&self, horizon_s: u32) -> Result<(), ScenarioError> {
        if self.period_s == 0 {
            return invalid("metering period_s must be positive");
        }
        if self.start_s >= self.end_s {
            return invalid("metering start_s must be before end_s");
        }
        if self.end_s > horizon_s {
            return invalid("metering end_s must not exceed the horizon");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Auction,
    VolumeFixed,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Auction => "auction",
            ControllerKind::VolumeFixed => "volume_fixed",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub horizon_s: u32,
    pub bin_s: u32,
    pub replications: u32,
    pub base_seed: u64,
    pub limits: Vec<u32>,
    pub controllers: Vec<ControllerKind>,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon_s == 0 || self.bin_s == 0 {
            return invalid("horizon_s and bin_s must be positive");
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1");
        }
        Ok(())
    }

    /// Seed of replication `index`: base seed plus index.
    pub fn seed(&self, index: u32) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub intersection: IntersectionModel,
    pub demand: DemandSpec,
    pub controller: ControllerParams,
    pub metering: MeteringSpec,
    pub experiment: ExperimentSpec,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse {
                key,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.intersection.validate()?;
        self.demand.validate()?;
        self.controller.validate()?;
        self.experiment.validate()?;
        self.metering.validate(self.experiment.horizon_s)?;
        Ok(())
    }

    /// Copy of this scenario with the metering limit replaced.
    pub fn with_limit(&self, limit: Option<u32>) -> Self {
        let mut s = self.clone();
        s.metering.limit_veh_per_hr = limit;
        s.metering.schedule = None;
        s
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json_str(&text)
}

/// Per-period vehicle budget for an hourly limit: `floor(limit * period / 3600)`.
pub fn budget_count(limit_veh_per_hr: u32, period_s: u32) -> u32 {
    ((limit_veh_per_hr as u64 * period_s as u64) / 3600) as u32
}

fn invalid<T>(constraint: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid {
        constraint: constraint.into(),
    })
}

/// The four-arm gated test intersection with default demand and timings.
pub fn test_case() -> ScenarioConfig {
    use Arm::*;
    use TurnKind::*;
    // (id, origin, destination, kind); phases pair 1+5, 2+6, 3+7, 4+8.
    let movement_table = [
        (1, E, W, ThroughRight),
        (2, E, S, Left),
        (3, N, S, ThroughRight),
        (4, N, E, Left),
        (5, W, E, ThroughRight),
        (6, W, N, Left),
        (7, S, N, ThroughRight),
        (8, S, W, Left),
    ];
    let movements = movement_table
        .iter()
        .map(|&(id, origin, destination, kind)| Movement {
            id: MovementId(id),
            origin,
            destination,
            kind,
        })
        .collect::<Vec<_>>();
    let phases = (1..=4)
        .map(|p| Phase {
            id: PhaseId(p),
            movements: vec![MovementId(p), MovementId(p + 4)],
        })
        .collect();
    let mut lanes = Vec::new();
    for arm in Arm::ALL {
        let left = movements.iter().find(|m| m.origin == arm && m.kind == Left).unwrap().id;
        let through = movements
            .iter()
            .find(|m| m.origin == arm && m.kind == ThroughRight)
            .unwrap()
            .id;
        // one left lane, two through lanes, one shared through+right lane
        for movement in [left, through, through, through] {
            lanes.push(Lane {
                id: LaneId(lanes.len() as u16),
                arm,
                length_m: 750.0,
                movement,
                speed_kmh: 50.0,
            });
        }
    }
    ScenarioConfig {
        id: "test_case".into(),
        intersection: IntersectionModel {
            lanes,
            movements,
            phases,
            inflows: vec![Inflow {
                arm: N,
                movements: vec![MovementId(3), MovementId(4)],
            }],
        },
        demand: DemandSpec {
            arrival_rate_veh_per_hr: Arm::ALL.iter().map(|&a| (a, 800.0)).collect(),
            turn_shares: TurnShares {
                left: 0.15,
                through: 0.70,
                right: 0.15,
            },
            lane_capacity_veh_per_hr: 900.0,
            vot_eur_per_hr: UniformRange { lo: 20.0, hi: 40.0 },
            impatience_slope: UniformRange { lo: 0.1, hi: 0.5 },
            impatience_midpoint_s: UniformRange { lo: 20.0, hi: 60.0 },
        },
        controller: ControllerParams::default(),
        metering: MeteringSpec {
            start_s: 3600,
            end_s: 7200,
            period_s: 300,
            limit_veh_per_hr: None,
            schedule: None,
        },
        experiment: ExperimentSpec {
            horizon_s: 10800,
            bin_s: 300,
            replications: 10,
            base_seed: 1,
            limits: vec![100, 250, 400, 550, 700],
            controllers: vec![ControllerKind::Auction, ControllerKind::VolumeFixed],
        },
    }
}
