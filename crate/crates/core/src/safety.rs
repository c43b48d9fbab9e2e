//! Context-dependent safety envelope and the trigger/transform algebra that
//! turns a planned action into the executed one.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendRequest, Parsed, Purpose, ReasoningBackend};
use crate::domain::{
    Action, Daylight, Navi, RoadGeometry, SafetyConstraints, Surrounding, TrafficDensity, VehicleMeasurements,
    Weather,
};
use crate::prompt;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("safety gain {field} must lie in (0, 1], got {value}")]
pub struct GainError {
    pub field: &'static str,
    pub value: f64,
}

/// Step sizes applied to throttle and brake when a constraint triggers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafetyGains {
    delta_throttle: f64,
    delta_brake: f64,
}

impl SafetyGains {
    pub fn new(delta_throttle: f64, delta_brake: f64) -> Result<Self, GainError> {
        for (field, value) in [("delta_throttle", delta_throttle), ("delta_brake", delta_brake)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(GainError { field, value });
            }
        }
        Ok(SafetyGains {
            delta_throttle,
            delta_brake,
        })
    }

    pub fn delta_throttle(&self) -> f64 {
        self.delta_throttle
    }

    pub fn delta_brake(&self) -> f64 {
        self.delta_brake
    }
}

impl Default for SafetyGains {
    fn default() -> Self {
        SafetyGains {
            delta_throttle: 0.1,
            delta_brake: 0.1,
        }
    }
}

impl<'de> Deserialize<'de> for SafetyGains {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            delta_throttle: f64,
            delta_brake: f64,
        }
        let r = Raw::deserialize(d)?;
        SafetyGains::new(r.delta_throttle, r.delta_brake).map_err(serde::de::Error::custom)
    }
}

/// Which constraints fired on one application.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triggered {
    pub max_speed: bool,
    pub min_following: bool,
    pub max_acceleration: bool,
    pub max_deceleration: bool,
    pub max_yaw_rate: bool,
    pub min_braking_distance: bool,
}

impl Triggered {
    pub fn any(&self) -> bool {
        self.max_speed
            || self.min_following
            || self.max_acceleration
            || self.max_deceleration
            || self.max_yaw_rate
            || self.min_braking_distance
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (on, name) in [
            (self.max_speed, "max_speed"),
            (self.min_following, "min_following"),
            (self.max_acceleration, "max_acceleration"),
            (self.max_deceleration, "max_deceleration"),
            (self.max_yaw_rate, "max_yaw_rate"),
            (self.min_braking_distance, "min_braking_distance"),
        ] {
            if on {
                out.push(name);
            }
        }
        out
    }
}

pub fn triggers(m: &VehicleMeasurements, sc: &SafetyConstraints) -> Triggered {
    Triggered {
        max_speed: m.v >= sc.v_max,
        min_following: m.d_follow < sc.d_min,
        max_acceleration: m.a_x > sc.ac_max,
        max_deceleration: m.a_x < -sc.de_max,
        max_yaw_rate: m.omega_z.abs() > sc.psi_max,
        min_braking_distance: m.v * m.v / (2.0 * sc.de_max) > sc.d_brake,
    }
}

/// Executed action after the safety envelope. All triggered terms are summed
/// before a single clamp per field.
pub fn apply_constraints(
    a: Action,
    m: &VehicleMeasurements,
    sc: &SafetyConstraints,
    g: &SafetyGains,
) -> Action {
    apply_constraints_traced(a, m, sc, g).0
}

pub fn apply_constraints_traced(
    a: Action,
    m: &VehicleMeasurements,
    sc: &SafetyConstraints,
    g: &SafetyGains,
) -> (Action, Triggered) {
    let t = triggers(m, sc);

    let mut throttle = a.throttle();
    if t.max_speed {
        throttle -= g.delta_throttle;
    }
    if t.min_following {
        throttle -= g.delta_throttle;
    }
    if t.max_acceleration {
        throttle -= g.delta_throttle * (m.a_x - sc.ac_max);
    }

    let mut brake = a.brake();
    if t.min_braking_distance {
        brake += g.delta_brake;
    }
    if t.max_deceleration {
        // Excess deceleration beyond the limit, positive whenever this fires.
        brake -= g.delta_brake * (-sc.de_max - m.a_x);
    }

    let steer = if t.max_yaw_rate {
        a.steer() * (sc.psi_max / m.omega_z.abs())
    } else {
        a.steer()
    };

    (Action::clamped(throttle, brake, steer), t)
}

pub const DEFAULT_CONSTRAINTS: SafetyConstraints = SafetyConstraints {
    v_max: 8.0,
    d_min: 6.0,
    ac_max: 2.5,
    de_max: 6.0,
    psi_max: 0.5,
    d_brake: 8.0,
};

/// Per-condition factors of the rule-based envelope. Upper limits take the
/// smallest factor across conditions, margins the largest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factors {
    pub v_max: f64,
    pub d_min: f64,
    pub ac_max: f64,
    pub de_max: f64,
    pub psi_max: f64,
}

const NEUTRAL: Factors = Factors {
    v_max: 1.0,
    d_min: 1.0,
    ac_max: 1.0,
    de_max: 1.0,
    psi_max: 1.0,
};

pub fn weather_factors(w: Weather) -> Factors {
    match w {
        Weather::Clear => NEUTRAL,
        Weather::Rain => Factors {
            v_max: 0.8,
            d_min: 1.3,
            ac_max: 0.8,
            de_max: 0.8,
            psi_max: 0.8,
        },
        Weather::Fog => Factors {
            v_max: 0.7,
            d_min: 1.5,
            ac_max: 0.9,
            de_max: 0.9,
            psi_max: 0.9,
        },
        Weather::Snow => Factors {
            v_max: 0.6,
            d_min: 1.5,
            ac_max: 0.6,
            de_max: 0.6,
            psi_max: 0.6,
        },
    }
}

pub fn daylight_factors(d: Daylight) -> Factors {
    match d {
        Daylight::Day => NEUTRAL,
        Daylight::Dusk => Factors {
            v_max: 0.9,
            d_min: 1.1,
            ..NEUTRAL
        },
        Daylight::Night => Factors {
            v_max: 0.75,
            d_min: 1.2,
            ..NEUTRAL
        },
    }
}

pub fn traffic_factors(t: TrafficDensity) -> Factors {
    match t {
        TrafficDensity::Low => NEUTRAL,
        TrafficDensity::Medium => Factors {
            v_max: 0.9,
            d_min: 1.2,
            ..NEUTRAL
        },
        TrafficDensity::High => Factors {
            v_max: 0.8,
            d_min: 1.5,
            ..NEUTRAL
        },
    }
}

pub fn geometry_factors(g: RoadGeometry) -> Factors {
    match g {
        RoadGeometry::Straight => NEUTRAL,
        RoadGeometry::LeftCurve | RoadGeometry::RightCurve => Factors {
            v_max: 0.8,
            ..NEUTRAL
        },
        RoadGeometry::Intersection => Factors {
            v_max: 0.6,
            d_min: 1.2,
            ..NEUTRAL
        },
    }
}

/// Rule-based envelope used whenever the backend gives no usable answer.
pub fn default_constraints(navi: &Navi, surrounding: &Surrounding) -> SafetyConstraints {
    let all = [
        weather_factors(surrounding.weather),
        daylight_factors(surrounding.daylight),
        traffic_factors(surrounding.traffic_density),
        geometry_factors(navi.road_geometry),
    ];
    let min = |f: fn(&Factors) -> f64| all.iter().map(f).fold(f64::INFINITY, f64::min);
    let max = |f: fn(&Factors) -> f64| all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let base = DEFAULT_CONSTRAINTS;
    SafetyConstraints {
        v_max: base.v_max * min(|f| f.v_max),
        d_min: base.d_min * max(|f| f.d_min),
        ac_max: base.ac_max * min(|f| f.ac_max),
        de_max: base.de_max * min(|f| f.de_max),
        psi_max: base.psi_max * min(|f| f.psi_max),
        d_brake: base.d_brake,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSource {
    Backend,
    Default,
}

#[derive(Debug, Serialize)]
struct ConstraintPayload<'a> {
    purpose: Purpose,
    key: Option<&'a str>,
    navi: &'a Navi,
    surrounding: &'a Surrounding,
    nearest_obstacle_m: Option<f64>,
}

/// Asks the backend for the envelope and falls back to the default table on
/// any failure. Never fails.
pub fn generate_constraints(
    navi: &Navi,
    surrounding: &Surrounding,
    nearest_obstacle_m: Option<f64>,
    backend: &dyn ReasoningBackend,
    key: Option<&str>,
    timeout_ms: u64,
) -> (SafetyConstraints, ConstraintSource) {
    let payload = ConstraintPayload {
        purpose: Purpose::SafetyConstraints,
        key,
        navi,
        surrounding,
        nearest_obstacle_m,
    };
    let lidar = nearest_obstacle_m
        .map(|d| format!("{d:.1} m"))
        .unwrap_or_else(|| "none within range".into());
    let req = BackendRequest {
        purpose: Purpose::SafetyConstraints,
        prompt: prompt::render(
            prompt::SAFETY_CONSTRAINTS,
            &[
                ("navi", prompt::describe_navi(navi)),
                ("surrounding", prompt::describe_surrounding(surrounding)),
                ("lidar", lidar),
            ],
        ),
        payload: serde_json::to_string(&payload).unwrap_or_default(),
        timeout_ms: timeout_ms.max(1),
    };
    match backend.call(&req) {
        Ok(resp) => match resp.parsed {
            Parsed::Constraints(sc) if sc.validate().is_ok() => (sc, ConstraintSource::Backend),
            other => {
                warn!("constraint backend answered with {other:?}; using defaults");
                (default_constraints(navi, surrounding), ConstraintSource::Default)
            }
        },
        Err(e) => {
            warn!("constraint backend failed: {e}; using defaults");
            (default_constraints(navi, surrounding), ConstraintSource::Default)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendError, BackendResponse, ScriptedBackend, ScriptedTable};

    fn m(v: f64, a_x: f64, omega_z: f64, d_follow: f64) -> VehicleMeasurements {
        VehicleMeasurements {
            v,
            a_x,
            omega_z,
            d_follow,
        }
    }

    fn sc(v_max: f64, d_min: f64, ac_max: f64, de_max: f64, psi_max: f64, d_brake: f64) -> SafetyConstraints {
        SafetyConstraints::new(v_max, d_min, ac_max, de_max, psi_max, d_brake).unwrap()
    }

    fn act(t: f64, b: f64, s: f64) -> Action {
        Action::new(t, b, s).unwrap()
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn speed_limit_trigger() {
        let g = SafetyGains::new(0.1, 0.1).unwrap();
        let out = apply_constraints(act(0.7, 0.0, 0.0), &m(12.0, 0.0, 0.0, INF), &sc(10.0, 5.0, 3.0, 100.0, 1.0, 100.0), &g);
        assert_eq!(out, Action::clamped(0.7 - 0.1, 0.0, 0.0));
        assert!((out.throttle() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn acceleration_limit_is_proportional() {
        let g = SafetyGains::new(0.1, 0.1).unwrap();
        let out = apply_constraints(act(0.5, 0.0, 0.0), &m(1.0, 3.0, 0.0, INF), &sc(10.0, 5.0, 2.0, 5.0, 1.0, 10.0), &g);
        assert!((out.throttle() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn yaw_rate_limit_scales_steer() {
        let out = apply_constraints(
            act(0.0, 0.0, 0.6),
            &m(1.0, 0.0, 0.4, INF),
            &sc(10.0, 5.0, 3.0, 5.0, 0.2, 10.0),
            &SafetyGains::default(),
        );
        assert!((out.steer() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn braking_distance_adds_brake() {
        let g = SafetyGains::new(0.1, 0.2).unwrap();
        // 10^2 / (2 * 5) = 10 > 8
        let out = apply_constraints(act(0.0, 0.3, 0.0), &m(10.0, 0.0, 0.0, INF), &sc(20.0, 5.0, 3.0, 5.0, 1.0, 8.0), &g);
        assert!((out.brake() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deceleration_limit_releases_brake() {
        let g = SafetyGains::new(0.1, 0.1).unwrap();
        let out = apply_constraints(act(0.0, 0.5, 0.0), &m(0.5, -6.0, 0.0, INF), &sc(10.0, 5.0, 3.0, 4.0, 1.0, 10.0), &g);
        assert!((out.brake() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn following_distance_trigger() {
        let g = SafetyGains::default();
        let (out, t) = apply_constraints_traced(act(0.7, 0.0, 0.0), &m(5.0, 0.0, 0.0, 3.0), &DEFAULT_CONSTRAINTS, &g);
        assert!(t.min_following);
        assert!((out.throttle() - 0.6).abs() < 1e-12);
        let (_, t) = apply_constraints_traced(act(0.7, 0.0, 0.0), &m(5.0, 0.0, 0.0, INF), &DEFAULT_CONSTRAINTS, &g);
        assert!(!t.min_following);
    }

    #[test]
    fn untriggered_is_identity() {
        let a = act(0.42, 0.13, -0.77);
        let (out, t) = apply_constraints_traced(a, &m(1.0, 0.1, 0.01, INF), &DEFAULT_CONSTRAINTS, &SafetyGains::default());
        assert!(!t.any());
        assert_eq!(out, a);
    }

    #[test]
    fn clamps_after_summing() {
        let g = SafetyGains::new(1.0, 1.0).unwrap();
        let out = apply_constraints(act(0.3, 0.9, 0.0), &m(20.0, 5.0, 0.0, 1.0), &sc(10.0, 5.0, 2.0, 5.0, 1.0, 1.0), &g);
        assert_eq!(out.throttle(), 0.0);
        assert_eq!(out.brake(), 1.0);
    }

    #[test]
    fn gains_validated() {
        assert!(SafetyGains::new(0.0, 0.1).is_err());
        assert!(SafetyGains::new(0.1, 1.5).is_err());
        assert!(SafetyGains::new(1.0, 1.0).is_ok());
    }

    fn navi(g: RoadGeometry) -> Navi {
        Navi {
            target_point: [5.0, 0.0],
            current_direction: 0.0,
            road_geometry: g,
        }
    }

    fn surrounding(w: Weather, d: Daylight, t: TrafficDensity) -> Surrounding {
        Surrounding {
            weather: w,
            daylight: d,
            traffic_density: t,
            nearest_obstacle_m: None,
        }
    }

    #[test]
    fn default_row_for_clear_day() {
        let empty = ScriptedBackend::new(ScriptedTable::new());
        let (c, src) = generate_constraints(
            &navi(RoadGeometry::Straight),
            &surrounding(Weather::Clear, Daylight::Day, TrafficDensity::Low),
            None,
            &empty,
            Some("anything"),
            100,
        );
        assert_eq!(src, ConstraintSource::Default);
        assert_eq!(c, sc(8.0, 6.0, 2.5, 6.0, 0.5, 8.0));
    }

    #[test]
    fn adverse_row() {
        let c = default_constraints(
            &navi(RoadGeometry::Intersection),
            &surrounding(Weather::Rain, Daylight::Night, TrafficDensity::High),
        );
        assert_eq!(c.v_max, 4.8);
        assert_eq!(c.d_min, 9.0);
    }

    #[test]
    fn adverse_rows_match_brute_force() {
        // Recompute every row independently from the factor tables.
        let weathers = [Weather::Clear, Weather::Rain, Weather::Fog, Weather::Snow];
        let days = [Daylight::Day, Daylight::Dusk, Daylight::Night];
        let traffic = [TrafficDensity::Low, TrafficDensity::Medium, TrafficDensity::High];
        let geoms = [
            RoadGeometry::Straight,
            RoadGeometry::LeftCurve,
            RoadGeometry::RightCurve,
            RoadGeometry::Intersection,
        ];
        for &w in &weathers {
            for &d in &days {
                for &t in &traffic {
                    for &g in &geoms {
                        let f = [weather_factors(w), daylight_factors(d), traffic_factors(t), geometry_factors(g)];
                        let mut v = f[0].v_max;
                        let mut dm = f[0].d_min;
                        for x in &f[1..] {
                            if x.v_max < v {
                                v = x.v_max;
                            }
                            if x.d_min > dm {
                                dm = x.d_min;
                            }
                        }
                        let c = default_constraints(&navi(g), &surrounding(w, d, t));
                        assert_eq!(c.v_max, 8.0 * v);
                        assert_eq!(c.d_min, 6.0 * dm);
                        assert!(c.validate().is_ok());
                        assert!(c.v_max <= 8.0 && c.d_min >= 6.0);
                    }
                }
            }
        }
    }

    #[test]
    fn valid_backend_record_is_adopted() {
        let mut table = ScriptedTable::new();
        table.insert(
            "k",
            Purpose::SafetyConstraints,
            r#"{"v_max": 10, "d_min": 5, "ac_max": 3, "de_max": 5, "psi_max": 0.6, "d_brake": 10}"#,
        );
        let b = ScriptedBackend::new(table);
        let (c, src) = generate_constraints(
            &navi(RoadGeometry::Straight),
            &surrounding(Weather::Rain, Daylight::Night, TrafficDensity::High),
            Some(12.0),
            &b,
            Some("k"),
            100,
        );
        assert_eq!(src, ConstraintSource::Backend);
        assert_eq!(c, sc(10.0, 5.0, 3.0, 5.0, 0.6, 10.0));
    }

    struct Broken;
    impl ReasoningBackend for Broken {
        fn call(&self, _: &BackendRequest) -> Result<BackendResponse, BackendError> {
            Err(BackendError::Timeout(5))
        }
    }

    #[test]
    fn backend_failure_falls_back() {
        let (c, src) = generate_constraints(
            &navi(RoadGeometry::Intersection),
            &surrounding(Weather::Rain, Daylight::Night, TrafficDensity::High),
            None,
            &Broken,
            None,
            10,
        );
        assert_eq!(src, ConstraintSource::Default);
        assert_eq!(c.v_max, 4.8);
    }
}
