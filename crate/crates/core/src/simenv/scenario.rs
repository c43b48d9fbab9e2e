use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::route::{Route, RouteSpec};
use crate::domain::{Daylight, LightState, ObjectClass, Surrounding, TrafficDensity, Weather};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("scenario `{name}`: {message}")]
    Invalid { name: String, message: String },
}

/// Object categories the deficit injector can mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficitClass {
    TrafficLight,
    StopSign,
    Pedestrian,
    Bicycle,
}

impl DeficitClass {
    pub fn object_class(self) -> ObjectClass {
        match self {
            DeficitClass::TrafficLight => ObjectClass::TrafficLight,
            DeficitClass::StopSign => ObjectClass::StopSign,
            DeficitClass::Pedestrian => ObjectClass::Pedestrian,
            DeficitClass::Bicycle => ObjectClass::Bicycle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DeficitPolicy {
    #[serde(default)]
    pub classes: BTreeSet<DeficitClass>,
    /// First tick the mask applies.
    #[serde(default)]
    pub start_tick: u64,
    /// Tick from which the mask no longer applies; open-ended if absent.
    #[serde(default)]
    pub end_tick: Option<u64>,
}

impl DeficitPolicy {
    pub fn masks(&self, class: ObjectClass, tick: u64) -> bool {
        tick >= self.start_tick
            && self.end_tick.is_none_or(|e| tick < e)
            && self.classes.iter().any(|c| c.object_class() == class)
    }

    pub fn contains(&self, class: DeficitClass) -> bool {
        self.classes.contains(&class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptPoint {
    /// Seconds since episode start.
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSpec {
    pub id: u32,
    pub class: ObjectClass,
    /// Parked props and other fixed obstacles.
    #[serde(default, rename = "static")]
    pub is_static: bool,
    pub script: Vec<ScriptPoint>,
    /// Heading while not moving; defaults to the direction of travel.
    #[serde(default)]
    pub heading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLightSpec {
    pub id: u32,
    pub position: [f64; 2],
    /// Arc length of the stop line along the route.
    pub stop_line_s: f64,
    /// `(start_tick, state)` entries, sorted by tick, first at tick 0.
    pub timeline: Vec<(u64, LightState)>,
}

impl TrafficLightSpec {
    pub fn state_at(&self, tick: u64) -> LightState {
        self.timeline
            .iter()
            .take_while(|(t, _)| *t <= tick)
            .last()
            .map(|(_, s)| *s)
            .unwrap_or(LightState::Red)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSignSpec {
    pub id: u32,
    pub position: [f64; 2],
    pub stop_line_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SurroundingSpec {
    #[serde(default)]
    pub weather: Weather,
    #[serde(default)]
    pub daylight: Daylight,
    #[serde(default)]
    pub traffic_density: TrafficDensity,
}

impl SurroundingSpec {
    pub fn with_obstacle(&self, nearest_obstacle_m: Option<f64>) -> Surrounding {
        Surrounding {
            weather: self.weather,
            daylight: self.daylight,
            traffic_density: self.traffic_density,
            nearest_obstacle_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Scripted-backend key; the name is used when absent.
    #[serde(default)]
    pub key: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub route: RouteSpec,
    #[serde(default)]
    pub initial_speed: f64,
    #[serde(default)]
    pub actors: Vec<ActorSpec>,
    #[serde(default)]
    pub traffic_lights: Vec<TrafficLightSpec>,
    #[serde(default)]
    pub stop_signs: Vec<StopSignSpec>,
    #[serde(default)]
    pub deficit_policy: DeficitPolicy,
    #[serde(default)]
    pub surrounding: SurroundingSpec,
    pub time_limit_ticks: u64,
    /// Amplitude of seeded uniform offsets applied to actor scripts, meters.
    #[serde(default)]
    pub jitter_m: f64,
}

impl Scenario {
    pub fn key(&self) -> &str {
        self.key.as_deref().unwrap_or(&self.name)
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            path: path.to_string(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |message: String| ScenarioError::Invalid {
            name: self.name.clone(),
            message,
        };
        let route = Route::new(&self.route).map_err(invalid)?;
        if self.time_limit_ticks == 0 {
            return Err(invalid("time_limit_ticks must be positive".into()));
        }
        if !(self.initial_speed >= 0.0 && self.initial_speed.is_finite()) {
            return Err(invalid("initial_speed must be non-negative".into()));
        }
        if !(self.jitter_m >= 0.0 && self.jitter_m.is_finite()) {
            return Err(invalid("jitter_m must be non-negative".into()));
        }
        let mut ids = BTreeSet::new();
        for a in &self.actors {
            if !ids.insert(a.id) {
                return Err(invalid(format!("duplicate object id {}", a.id)));
            }
            if matches!(a.class, ObjectClass::TrafficLight | ObjectClass::StopSign) {
                return Err(invalid(format!("actor {} uses a signal class; declare signals separately", a.id)));
            }
            if a.script.is_empty() {
                return Err(invalid(format!("actor {} has an empty script", a.id)));
            }
            if a.script.windows(2).any(|w| !(w[1].t > w[0].t)) {
                return Err(invalid(format!("actor {} script times must increase", a.id)));
            }
        }
        for l in &self.traffic_lights {
            if !ids.insert(l.id) {
                return Err(invalid(format!("duplicate object id {}", l.id)));
            }
            if l.timeline.first().map(|(t, _)| *t) != Some(0) || l.timeline.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(invalid(format!("light {} timeline must start at 0 and increase", l.id)));
            }
            if !(0.0..=route.length()).contains(&l.stop_line_s) {
                return Err(invalid(format!("light {} stop line is off the route", l.id)));
            }
        }
        for s in &self.stop_signs {
            if !ids.insert(s.id) {
                return Err(invalid(format!("duplicate object id {}", s.id)));
            }
            if !(0.0..=route.length()).contains(&s.stop_line_s) {
                return Err(invalid(format!("stop sign {} stop line is off the route", s.id)));
            }
        }
        Ok(())
    }
}

/// Loads one file, or every `*.json` file in a directory in name order.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, ScenarioError> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|source| ScenarioError::Io {
                path: path.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files.iter().map(|p| Scenario::load(p)).collect()
    } else {
        Ok(vec![Scenario::load(path)?])
    }
}
