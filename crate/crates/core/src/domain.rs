//! Shared vocabulary: actuator commands, condition-action plans, symbolic
//! perception, hazards and safety envelopes.
//!
//! Conventions used everywhere in the crate:
//!
//! * World frame is right-handed: `x` east, `y` north, heading measured
//!   counter-clockwise from `+x` in radians.
//! * Steering is a fraction in `[-1, 1]`; **negative steers left, positive
//!   steers right**.
//! * Image boxes are normalized to the image size, `x` grows to the right and
//!   `y` grows downwards.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{field} out of range: {value}")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("invalid box ({x0}, {y0}, {x1}, {y1})")]
    InvalidBox { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("sequence of {len} pairs exceeds limit {limit}")]
    SequenceTooLong { len: usize, limit: usize },
    #[error("sequence limit must be positive")]
    ZeroLimit,
}

fn check_range(field: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), DomainError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(DomainError::OutOfRange { field, value })
    }
}

/// Actuator triple executed for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Action {
    throttle: f64,
    brake: f64,
    steer: f64,
}

impl Action {
    /// The unconditional stop emitted whenever planning or verification
    /// cannot proceed.
    pub const FAIL_SAFE_STOP: Action = Action {
        throttle: 0.0,
        brake: 0.8,
        steer: 0.0,
    };

    pub const IDLE: Action = Action {
        throttle: 0.0,
        brake: 0.0,
        steer: 0.0,
    };

    pub fn new(throttle: f64, brake: f64, steer: f64) -> Result<Self, DomainError> {
        validate_action(Action {
            throttle,
            brake,
            steer,
        })
    }

    /// Builds an action by clamping every field into its range. NaN maps to 0.
    pub fn clamped(throttle: f64, brake: f64, steer: f64) -> Self {
        fn fix(v: f64, lo: f64, hi: f64) -> f64 {
            if v.is_nan() {
                0.0
            } else {
                v.clamp(lo, hi)
            }
        }
        Action {
            throttle: fix(throttle, 0.0, 1.0),
            brake: fix(brake, 0.0, 1.0),
            steer: fix(steer, -1.0, 1.0),
        }
    }

    pub fn throttle(&self) -> f64 {
        self.throttle
    }

    pub fn brake(&self) -> f64 {
        self.brake
    }

    pub fn steer(&self) -> f64 {
        self.steer
    }

    pub fn is_in_range(&self) -> bool {
        validate_action(*self).is_ok()
    }
}

/// Returns `a` unchanged when every field lies in its closed range.
pub fn validate_action(a: Action) -> Result<Action, DomainError> {
    check_range("throttle", a.throttle, 0.0, 1.0)?;
    check_range("brake", a.brake, 0.0, 1.0)?;
    check_range("steer", a.steer, -1.0, 1.0)?;
    Ok(a)
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            throttle: f64,
            brake: f64,
            steer: f64,
        }
        let raw = Raw::deserialize(d)?;
        Action::new(raw.throttle, raw.brake, raw.steer).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    MoveForward,
    Stop,
    ChangeLaneLeft,
    ChangeLaneRight,
    TurnLeft,
    TurnRight,
}

impl Behavior {
    pub const ALL: [Behavior; 6] = [
        Behavior::MoveForward,
        Behavior::Stop,
        Behavior::ChangeLaneLeft,
        Behavior::ChangeLaneRight,
        Behavior::TurnLeft,
        Behavior::TurnRight,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedControl {
    ConstantSpeed,
    Deceleration,
    QuickDeceleration,
    DecelerationToZero,
    Acceleration,
    QuickAcceleration,
}

impl SpeedControl {
    pub const ALL: [SpeedControl; 6] = [
        SpeedControl::ConstantSpeed,
        SpeedControl::Deceleration,
        SpeedControl::QuickDeceleration,
        SpeedControl::DecelerationToZero,
        SpeedControl::Acceleration,
        SpeedControl::QuickAcceleration,
    ];

    pub fn is_deceleration(self) -> bool {
        matches!(
            self,
            SpeedControl::Deceleration
                | SpeedControl::QuickDeceleration
                | SpeedControl::DecelerationToZero
        )
    }

    pub fn is_acceleration(self) -> bool {
        matches!(
            self,
            SpeedControl::Acceleration | SpeedControl::QuickAcceleration
        )
    }
}

/// Driving behavior plus speed token, as produced by the motion planner.
///
/// `Stop` always carries `DecelerationToZero`; the constructor and the
/// deserializer both normalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HighLevelAction {
    behavior: Behavior,
    speed: SpeedControl,
}

impl HighLevelAction {
    pub fn new(behavior: Behavior, speed: SpeedControl) -> Self {
        let speed = if behavior == Behavior::Stop {
            SpeedControl::DecelerationToZero
        } else {
            speed
        };
        HighLevelAction { behavior, speed }
    }

    pub fn stop() -> Self {
        Self::new(Behavior::Stop, SpeedControl::DecelerationToZero)
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    pub fn speed(&self) -> SpeedControl {
        self.speed
    }
}

impl<'de> Deserialize<'de> for HighLevelAction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            behavior: Behavior,
            speed: SpeedControl,
        }
        let raw = Raw::deserialize(d)?;
        Ok(HighLevelAction::new(raw.behavior, raw.speed))
    }
}

/// Guard attached to each planned action. Inconsistent deficits are never a
/// guard: they force replanning instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionCondition {
    ConsistentNoImmediateHazard,
    ConsistentImmediateHazard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditionActionPair {
    pub condition: ExecutionCondition,
    #[serde(flatten)]
    pub action: HighLevelAction,
}

impl ConditionActionPair {
    pub fn new(condition: ExecutionCondition, action: HighLevelAction) -> Self {
        ConditionActionPair { condition, action }
    }
}

/// Plan-ahead queue of condition-action pairs, consumed front to back.
///
/// Every public constructor enforces `len() <= limit()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSequence {
    pairs: VecDeque<ConditionActionPair>,
    created_tick: u64,
    limit: usize,
}

impl ActionSequence {
    pub fn empty(created_tick: u64, limit: usize) -> Self {
        ActionSequence {
            pairs: VecDeque::new(),
            created_tick,
            limit: limit.max(1),
        }
    }

    /// Rejects pair lists longer than `limit`.
    pub fn new(
        pairs: Vec<ConditionActionPair>,
        created_tick: u64,
        limit: usize,
    ) -> Result<Self, DomainError> {
        if limit == 0 {
            return Err(DomainError::ZeroLimit);
        }
        if pairs.len() > limit {
            return Err(DomainError::SequenceTooLong {
                len: pairs.len(),
                limit,
            });
        }
        Ok(ActionSequence {
            pairs: pairs.into(),
            created_tick,
            limit,
        })
    }

    /// Keeps the first `limit` pairs. The flag reports whether anything was
    /// dropped.
    pub fn truncated(
        mut pairs: Vec<ConditionActionPair>,
        created_tick: u64,
        limit: usize,
    ) -> (Self, bool) {
        let limit = limit.max(1);
        let cut = pairs.len() > limit;
        pairs.truncate(limit);
        (
            ActionSequence {
                pairs: pairs.into(),
                created_tick,
                limit,
            },
            cut,
        )
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn created_tick(&self) -> u64 {
        self.created_tick
    }

    pub fn front(&self) -> Option<&ConditionActionPair> {
        self.pairs.front()
    }

    pub(crate) fn front_mut(&mut self) -> Option<&mut ConditionActionPair> {
        self.pairs.front_mut()
    }

    pub fn pop_front(&mut self) -> Option<ConditionActionPair> {
        self.pairs.pop_front()
    }

    /// Appends a pair if there is room.
    pub fn push_back(&mut self, pair: ConditionActionPair) -> Result<(), DomainError> {
        if self.pairs.len() >= self.limit {
            return Err(DomainError::SequenceTooLong {
                len: self.pairs.len() + 1,
                limit: self.limit,
            });
        }
        self.pairs.push_back(pair);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConditionActionPair> {
        self.pairs.iter()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }
}

impl<'de> Deserialize<'de> for ActionSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pairs: Vec<ConditionActionPair>,
            created_tick: u64,
            limit: usize,
        }
        let raw = Raw::deserialize(d)?;
        ActionSequence::new(raw.pairs, raw.created_tick, raw.limit).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewId {
    Left,
    Front,
    Right,
}

impl ViewId {
    pub const ALL: [ViewId; 3] = [ViewId::Left, ViewId::Front, ViewId::Right];
}

/// Axis-aligned rectangle in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBox {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl NormBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, DomainError> {
        let ok = [x0, y0, x1, y1].iter().all(|v| v.is_finite())
            && 0.0 <= x0
            && x0 < x1
            && x1 <= 1.0
            && 0.0 <= y0
            && y0 < y1
            && y1 <= 1.0;
        if ok {
            Ok(NormBox { x0, y0, x1, y1 })
        } else {
            Err(DomainError::InvalidBox { x0, y0, x1, y1 })
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn centroid(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, other: &NormBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }
}

impl<'de> Deserialize<'de> for NormBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            x0: f64,
            y0: f64,
            x1: f64,
            y1: f64,
        }
        let r = Raw::deserialize(d)?;
        NormBox::new(r.x0, r.y0, r.x1, r.y1).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Car,
    Truck,
    Bus,
    Bicycle,
    Pedestrian,
    Motorcycle,
    TrafficLight,
    StopSign,
}

impl ObjectClass {
    /// Road users counted by the hazard-proximity ratio. Signals are not.
    pub fn is_traffic_object(self) -> bool {
        !matches!(self, ObjectClass::TrafficLight | ObjectClass::StopSign)
    }

    pub fn is_vehicle(self) -> bool {
        matches!(
            self,
            ObjectClass::Car
                | ObjectClass::Truck
                | ObjectClass::Bus
                | ObjectClass::Bicycle
                | ObjectClass::Motorcycle
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightState {
    Red,
    Yellow,
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitRegion {
    pub view: ViewId,
    #[serde(rename = "box")]
    pub bbox: NormBox,
    /// Ground truth only. Stripped before anything reaches a reasoning
    /// backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_object_id: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub class: ObjectClass,
    #[serde(rename = "box")]
    pub bbox: NormBox,
    pub range_m: f64,
    /// Lamp color, for traffic lights only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light_state: Option<LightState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub view: ViewId,
    #[serde(default)]
    pub visible_objects: Vec<VisibleObject>,
    #[serde(default)]
    pub deficits: Vec<DeficitRegion>,
}

impl CameraView {
    pub fn empty(view: ViewId) -> Self {
        CameraView {
            view,
            visible_objects: Vec::new(),
            deficits: Vec::new(),
        }
    }

    /// Drops visible objects hidden entirely inside a deficit of this view.
    pub fn enforce_occlusion(&mut self) {
        let deficits = &self.deficits;
        self.visible_objects
            .retain(|o| !deficits.iter().any(|d| d.bbox.contains(&o.bbox)));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    pub left: CameraView,
    pub front: CameraView,
    pub right: CameraView,
}

impl Perception {
    pub fn empty() -> Self {
        Perception {
            left: CameraView::empty(ViewId::Left),
            front: CameraView::empty(ViewId::Front),
            right: CameraView::empty(ViewId::Right),
        }
    }

    pub fn view(&self, id: ViewId) -> &CameraView {
        match id {
            ViewId::Left => &self.left,
            ViewId::Front => &self.front,
            ViewId::Right => &self.right,
        }
    }

    pub fn view_mut(&mut self, id: ViewId) -> &mut CameraView {
        match id {
            ViewId::Left => &mut self.left,
            ViewId::Front => &mut self.front,
            ViewId::Right => &mut self.right,
        }
    }

    pub fn views(&self) -> [&CameraView; 3] {
        [&self.left, &self.front, &self.right]
    }

    pub fn deficit_count(&self) -> usize {
        self.views().iter().map(|v| v.deficits.len()).sum()
    }
}

/// Planar pose in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    /// Expresses a world point in this pose's frame as (forward, left).
    pub fn to_local(&self, p: [f64; 2]) -> (f64, f64) {
        let (dx, dy) = (p[0] - self.x, p[1] - self.y);
        let (s, c) = self.heading.sin_cos();
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadGeometry {
    Straight,
    LeftCurve,
    RightCurve,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Navi {
    pub target_point: [f64; 2],
    pub current_direction: f64,
    pub road_geometry: RoadGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weather {
    #[default]
    Clear,
    Rain,
    Fog,
    Snow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Daylight {
    #[default]
    Day,
    Dusk,
    Night,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficDensity {
    #[default]
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Surrounding {
    pub weather: Weather,
    pub daylight: Daylight,
    pub traffic_density: TrafficDensity,
    /// Range to the closest obstacle from the range sensor, which is never
    /// masked.
    #[serde(default)]
    pub nearest_obstacle_m: Option<f64>,
}

/// Everything the override sees at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSnapshot {
    pub tick: u64,
    pub perception: Perception,
    pub navi: Navi,
    pub surrounding: Surrounding,
}

impl EnvironmentSnapshot {
    pub fn has_deficit(&self) -> bool {
        self.perception.deficit_count() > 0
    }

    /// Copy with ground-truth mask identities removed.
    pub fn redacted(&self) -> EnvironmentSnapshot {
        let mut out = self.clone();
        for id in ViewId::ALL {
            for d in &mut out.perception.view_mut(id).deficits {
                d.masked_object_id = None;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardObject {
    Car,
    Truck,
    Bus,
    Bicycle,
    Pedestrian,
    Motorcycle,
    TrafficLight,
    StopSign,
    Unknown,
}

impl From<ObjectClass> for HazardObject {
    fn from(c: ObjectClass) -> Self {
        match c {
            ObjectClass::Car => HazardObject::Car,
            ObjectClass::Truck => HazardObject::Truck,
            ObjectClass::Bus => HazardObject::Bus,
            ObjectClass::Bicycle => HazardObject::Bicycle,
            ObjectClass::Pedestrian => HazardObject::Pedestrian,
            ObjectClass::Motorcycle => HazardObject::Motorcycle,
            ObjectClass::TrafficLight => HazardObject::TrafficLight,
            ObjectClass::StopSign => HazardObject::StopSign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Stationary,
    Oncoming,
    Crossing,
    SameDirection,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hazard {
    pub object: HazardObject,
    pub motion: Motion,
}

pub type HazardSet = Vec<Hazard>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Move,
    StopObserveMove,
}

/// Output of short-term motion planning. Each strategy carries exactly its
/// own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum MotionPlan {
    Move {
        sequence: ActionSequence,
    },
    StopObserveMove {
        wait_ticks: u64,
        move_trigger: ExecutionCondition,
    },
}

impl MotionPlan {
    pub fn strategy(&self) -> Strategy {
        match self {
            MotionPlan::Move { .. } => Strategy::Move,
            MotionPlan::StopObserveMove { .. } => Strategy::StopObserveMove,
        }
    }
}

/// The six-limit envelope. All fields strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafetyConstraints {
    pub v_max: f64,
    pub d_min: f64,
    pub ac_max: f64,
    pub de_max: f64,
    pub psi_max: f64,
    pub d_brake: f64,
}

impl SafetyConstraints {
    pub fn new(
        v_max: f64,
        d_min: f64,
        ac_max: f64,
        de_max: f64,
        psi_max: f64,
        d_brake: f64,
    ) -> Result<Self, DomainError> {
        let sc = SafetyConstraints {
            v_max,
            d_min,
            ac_max,
            de_max,
            psi_max,
            d_brake,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let fields = [
            ("v_max", self.v_max),
            ("d_min", self.d_min),
            ("ac_max", self.ac_max),
            ("de_max", self.de_max),
            ("psi_max", self.psi_max),
            ("d_brake", self.d_brake),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(DomainError::OutOfRange { field, value });
            }
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for SafetyConstraints {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            v_max: f64,
            d_min: f64,
            ac_max: f64,
            de_max: f64,
            psi_max: f64,
            d_brake: f64,
        }
        let r = Raw::deserialize(d)?;
        SafetyConstraints::new(r.v_max, r.d_min, r.ac_max, r.de_max, r.psi_max, r.d_brake)
            .map_err(serde::de::Error::custom)
    }
}

/// Onboard measurements consumed by the safety envelope.
///
/// `d_follow` is `f64::INFINITY` when there is no lead vehicle; it serializes
/// as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleMeasurements {
    pub v: f64,
    pub a_x: f64,
    pub omega_z: f64,
    #[serde(with = "infinite_as_null")]
    pub d_follow: f64,
}

impl VehicleMeasurements {
    pub const NO_LEAD: f64 = f64::INFINITY;
}

mod infinite_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(throttle {:.3}, brake {:.3}, steer {:+.3})",
            self.throttle, self.brake, self.steer
        )
    }
}
