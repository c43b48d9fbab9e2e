//! Deterministic 2D closed-loop driving world.

mod agent;
mod infraction;
mod perception;
mod route;
mod scenario;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use agent::{BaseAgent, BASE_HAZARD_RANGE_M};
pub use infraction::{detect_infractions, footprints_overlap, InfractionEvent, InfractionKind};
pub use perception::{observe, perceive, Observation};
pub use route::{ProgressTracker, Route, RouteSpec};
pub use scenario::{
    load_scenarios, ActorSpec, DeficitClass, DeficitPolicy, Scenario, ScenarioError, ScriptPoint, StopSignSpec,
    SurroundingSpec, TrafficLightSpec,
};

use crate::domain::{
    wrap_angle, Action, EnvironmentSnapshot, LightState, Navi, ObjectClass, Pose, VehicleMeasurements,
};

pub const EGO_LENGTH_M: f64 = 4.5;
pub const EGO_WIDTH_M: f64 = 1.9;
/// Speed below which the ego counts as stopped.
pub const STOPPED_SPEED: f64 = 0.1;
/// A stop counts for a stop sign if made this close before its line.
pub const STOP_SIGN_ZONE_M: f64 = 5.0;
const LANE_HALF_WIDTH_M: f64 = 1.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// m/s² per unit throttle.
    pub k_throttle: f64,
    /// m/s² per unit brake.
    pub k_brake: f64,
    /// Linear drag, 1/s.
    pub drag: f64,
    pub wheelbase: f64,
    pub max_steer_deg: f64,
    /// Distance ahead along the route of the navigation target point.
    pub lookahead_m: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            k_throttle: 3.0,
            k_brake: 8.0,
            drag: 0.25,
            wheelbase: 2.5,
            max_steer_deg: 35.0,
            lookahead_m: 6.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        pos("dt", self.dt)?;
        pos("k_throttle", self.k_throttle)?;
        pos("k_brake", self.k_brake)?;
        pos("wheelbase", self.wheelbase)?;
        pos("lookahead_m", self.lookahead_m)?;
        if !(self.drag >= 0.0 && self.drag.is_finite()) {
            return Err(format!("drag must be non-negative, got {}", self.drag));
        }
        if !(self.max_steer_deg > 0.0 && self.max_steer_deg < 90.0) {
            return Err(format!("max_steer_deg must be in (0, 90), got {}", self.max_steer_deg));
        }
        Ok(())
    }

    pub fn max_steer_rad(&self) -> f64 {
        self.max_steer_deg.to_radians()
    }
}

/// Footprint length, width and height of an object class.
pub fn class_dimensions(class: ObjectClass) -> (f64, f64, f64) {
    match class {
        ObjectClass::Pedestrian => (0.6, 0.6, 1.8),
        ObjectClass::Bicycle => (1.8, 0.6, 1.7),
        ObjectClass::Motorcycle => (2.2, 0.8, 1.5),
        ObjectClass::Car => (4.5, 1.9, 1.5),
        ObjectClass::Truck => (8.0, 2.5, 3.5),
        ObjectClass::Bus => (12.0, 2.6, 3.2),
        ObjectClass::TrafficLight => (0.5, 0.5, 4.0),
        ObjectClass::StopSign => (0.6, 0.6, 2.3),
    }
}

/// Lower edge of the visible part of an object, meters above ground.
pub fn class_base_height(class: ObjectClass) -> f64 {
    match class {
        ObjectClass::TrafficLight => 3.0,
        ObjectClass::StopSign => 1.5,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub pose: Pose,
    pub v: f64,
    pub a_x: f64,
    pub omega_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActorState {
    pub id: u32,
    pub class: ObjectClass,
    pub is_static: bool,
    pub pose: Pose,
    pub velocity: [f64; 2],
}

impl ActorState {
    pub fn dimensions(&self) -> (f64, f64) {
        let (l, w, _) = class_dimensions(self.class);
        (l, w)
    }
}

/// Everything fixed for the length of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub name: String,
    pub key: String,
    pub route: Route,
    pub actors: Vec<ActorSpec>,
    pub traffic_lights: Vec<TrafficLightSpec>,
    pub stop_signs: Vec<StopSignSpec>,
    pub policy: DeficitPolicy,
    pub surrounding: SurroundingSpec,
    pub time_limit_ticks: u64,
}

impl WorldSpec {
    /// Builds the episode's fixed world, applying seeded script jitter.
    pub fn from_scenario(sc: &Scenario, seed: u64) -> Result<Self, ScenarioError> {
        sc.validate()?;
        let route = Route::new(&sc.route).map_err(|message| ScenarioError::Invalid {
            name: sc.name.clone(),
            message,
        })?;
        let mut actors = sc.actors.clone();
        if sc.jitter_m > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for a in &mut actors {
                let (dx, dy) = (
                    rng.random_range(-sc.jitter_m..=sc.jitter_m),
                    rng.random_range(-sc.jitter_m..=sc.jitter_m),
                );
                for p in &mut a.script {
                    p.x += dx;
                    p.y += dy;
                }
            }
        }
        Ok(WorldSpec {
            name: sc.name.clone(),
            key: sc.key().to_string(),
            route,
            actors,
            traffic_lights: sc.traffic_lights.clone(),
            stop_signs: sc.stop_signs.clone(),
            policy: sc.deficit_policy.clone(),
            surrounding: sc.surrounding,
            time_limit_ticks: sc.time_limit_ticks,
        })
    }
}

fn actor_at(spec: &ActorSpec, t: f64) -> ActorState {
    let pts = &spec.script;
    let seg = pts.windows(2).position(|w| t < w[1].t);
    let (pos, vel) = match seg {
        _ if t <= pts[0].t => ([pts[0].x, pts[0].y], [0.0, 0.0]),
        None => {
            let last = pts[pts.len() - 1];
            ([last.x, last.y], [0.0, 0.0])
        }
        Some(i) => {
            let (a, b) = (pts[i], pts[i + 1]);
            let span = b.t - a.t;
            let f = (t - a.t) / span;
            let vel = [(b.x - a.x) / span, (b.y - a.y) / span];
            ([a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)], vel)
        }
    };
    let heading = if vel[0].hypot(vel[1]) > 1e-9 {
        vel[1].atan2(vel[0])
    } else {
        spec.heading.unwrap_or_else(|| {
            // face the way the script last moved, or will first move
            let i = seg.unwrap_or(pts.len().saturating_sub(1));
            let moving = |w: &[ScriptPoint]| (w[1].x - w[0].x).hypot(w[1].y - w[0].y) > 1e-9;
            pts.windows(2)
                .take(i.max(1))
                .rev()
                .find(|w| moving(w))
                .or_else(|| pts.windows(2).find(|w| moving(w)))
                .map(|w| (w[1].y - w[0].y).atan2(w[1].x - w[0].x))
                .unwrap_or(0.0)
        })
    };
    ActorState {
        id: spec.id,
        class: spec.class,
        is_static: spec.is_static,
        pose: Pose::new(pos[0], pos[1], heading),
        velocity: vel,
    }
}

/// World state at one tick. Cloning is cheap: the fixed part is shared.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub spec: Arc<WorldSpec>,
    pub config: SimConfig,
    pub tick: u64,
    pub ego: EgoState,
    pub progress: ProgressTracker,
    /// Per stop sign: whether the ego has made a valid stop before its line.
    pub served: Vec<bool>,
}

impl WorldState {
    pub fn new(spec: Arc<WorldSpec>, config: SimConfig, initial_speed: f64) -> Self {
        let start = spec.route.point_at(0.0);
        let heading = spec.route.heading_at(0.0);
        let served = vec![false; spec.stop_signs.len()];
        WorldState {
            spec,
            config,
            tick: 0,
            ego: EgoState {
                pose: Pose::new(start[0], start[1], heading),
                v: initial_speed,
                a_x: 0.0,
                omega_z: 0.0,
            },
            progress: ProgressTracker::default(),
            served,
        }
    }

    pub fn from_scenario(sc: &Scenario, seed: u64, config: SimConfig) -> Result<Self, ScenarioError> {
        let spec = WorldSpec::from_scenario(sc, seed)?;
        Ok(Self::new(Arc::new(spec), config, sc.initial_speed))
    }

    pub fn time_s(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn actors(&self) -> Vec<ActorState> {
        let t = self.time_s();
        self.spec.actors.iter().map(|a| actor_at(a, t)).collect()
    }

    pub fn light_state(&self, idx: usize) -> LightState {
        self.spec.traffic_lights[idx].state_at(self.tick)
    }

    /// Arc length of the ego's front bumper along the route.
    pub fn front_s(&self) -> f64 {
        self.progress.s + 0.5 * EGO_LENGTH_M
    }

    pub fn route_complete(&self) -> bool {
        self.progress.max_s >= self.spec.route.length()
    }

    pub fn done(&self) -> bool {
        self.route_complete() || self.tick >= self.spec.time_limit_ticks
    }

    pub fn navi(&self) -> Navi {
        let s = self.progress.s;
        let route = &self.spec.route;
        Navi {
            target_point: route.point_at(s + self.config.lookahead_m),
            current_direction: route.heading_at(s),
            road_geometry: route.geometry_at(s),
        }
    }

    /// Range-sensor distance to the closest actor, which masking never hides.
    pub fn nearest_obstacle(&self) -> Option<f64> {
        let p = self.ego.pose;
        self.actors()
            .iter()
            .map(|a| (a.pose.x - p.x).hypot(a.pose.y - p.y))
            .filter(|d| *d <= crate::camera::MAX_RANGE_M)
            .min_by(f64::total_cmp)
    }

    /// Bumper-to-bumper gap to the closest actor in the ego's lane ahead.
    pub fn following_distance(&self) -> f64 {
        let p = self.ego.pose;
        self.actors()
            .iter()
            .filter_map(|a| {
                let (fwd, left) = p.to_local([a.pose.x, a.pose.y]);
                let (l, w) = a.dimensions();
                let reach = 0.5 * l.max(w);
                (fwd > 0.0 && left.abs() <= LANE_HALF_WIDTH_M + 0.5 * w)
                    .then(|| (fwd - 0.5 * EGO_LENGTH_M - reach).max(0.0))
            })
            .filter(|d| *d <= crate::camera::MAX_RANGE_M)
            .min_by(f64::total_cmp)
            .unwrap_or(VehicleMeasurements::NO_LEAD)
    }

    pub fn measurements(&self) -> VehicleMeasurements {
        VehicleMeasurements {
            v: self.ego.v,
            a_x: self.ego.a_x,
            omega_z: self.ego.omega_z,
            d_follow: self.following_distance(),
        }
    }

    pub fn snapshot(&self) -> EnvironmentSnapshot {
        perceive(self)
    }
}

/// Advances the world by one step under `a`.
///
/// Steer is positive to the right, so a positive command turns the heading
/// clockwise.
pub fn tick(w: &WorldState, a: Action) -> WorldState {
    let c = &w.config;
    let dt = c.dt;
    let ego = w.ego;
    let accel = c.k_throttle * a.throttle() - c.k_brake * a.brake() - c.drag * ego.v;
    let v = (ego.v + accel * dt).max(0.0);
    let yaw = (v / c.wheelbase) * (a.steer() * c.max_steer_rad()).tan() * dt;
    let heading = wrap_angle(ego.pose.heading - yaw);
    let pose = Pose::new(
        ego.pose.x + v * heading.cos() * dt,
        ego.pose.y + v * heading.sin() * dt,
        heading,
    );

    let mut next = w.clone();
    next.tick = w.tick + 1;
    next.ego = EgoState {
        pose,
        v,
        a_x: (v - ego.v) / dt,
        omega_z: wrap_angle(heading - ego.pose.heading) / dt,
    };
    next.progress.update(&w.spec.route, [pose.x, pose.y]);
    let front = next.front_s();
    for (i, sign) in w.spec.stop_signs.iter().enumerate() {
        let before = sign.stop_line_s - front;
        if v < STOPPED_SPEED && (0.0..=STOP_SIGN_ZONE_M).contains(&before) {
            next.served[i] = true;
        }
    }
    next
}
