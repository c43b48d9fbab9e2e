//! Route completion, infraction score, driving score and average speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simenv::{DeficitClass, DeficitPolicy, InfractionEvent, InfractionKind, ProgressTracker, Route};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("game time must be positive")]
    ZeroTime,
}

/// Multiplicative penalty per infraction kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Penalties {
    pub collision_pedestrian: f64,
    pub collision_vehicle: f64,
    pub collision_static: f64,
    pub red_light: f64,
    pub stop_sign: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Penalties {
            collision_pedestrian: 0.50,
            collision_vehicle: 0.60,
            collision_static: 0.65,
            red_light: 0.70,
            stop_sign: 0.80,
        }
    }
}

impl Penalties {
    pub fn of(&self, kind: InfractionKind) -> f64 {
        match kind {
            InfractionKind::CollisionPedestrian => self.collision_pedestrian,
            InfractionKind::CollisionVehicle => self.collision_vehicle,
            InfractionKind::CollisionStatic => self.collision_static,
            InfractionKind::RedLight => self.red_light,
            InfractionKind::StopSign => self.stop_sign,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("collision_pedestrian", self.collision_pedestrian),
            ("collision_vehicle", self.collision_vehicle),
            ("collision_static", self.collision_static),
            ("red_light", self.red_light),
            ("stop_sign", self.stop_sign),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("penalty {name} = {v} not in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Arc-length share of the route covered, in percent.
pub fn route_completion(route: &Route, trajectory: &[[f64; 2]]) -> f64 {
    let mut t = ProgressTracker::default();
    for p in trajectory {
        t.update(route, *p);
    }
    completion_percent(t.max_s, route.length())
}

pub fn completion_percent(progress_m: f64, route_length_m: f64) -> f64 {
    (100.0 * progress_m / route_length_m).clamp(0.0, 100.0)
}

/// Whether the deficit policy removes this kind of event from scoring.
pub fn is_excluded(kind: InfractionKind, policy: &DeficitPolicy) -> bool {
    match kind {
        InfractionKind::RedLight => policy.contains(DeficitClass::TrafficLight),
        InfractionKind::StopSign => policy.contains(DeficitClass::StopSign),
        _ => false,
    }
}

/// Product of penalties over events, skipping signal violations whose
/// signal class was masked.
pub fn infraction_score(events: &[InfractionEvent], policy: &DeficitPolicy, penalties: &Penalties) -> f64 {
    events
        .iter()
        .filter(|e| !is_excluded(e.kind, policy))
        .fold(1.0, |acc, e| acc * penalties.of(e.kind))
}

pub fn driving_score(rc: f64, is_score: f64) -> f64 {
    rc * is_score
}

pub fn average_speed(distance_m: f64, game_time_s: f64) -> Result<f64, MetricsError> {
    if !(game_time_s > 0.0) {
        return Err(MetricsError::ZeroTime);
    }
    Ok(distance_m / game_time_s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: String,
    pub mode: String,
    pub rc: f64,
    pub is_score: f64,
    pub ds: f64,
    pub as_speed: f64,
    pub infractions: Vec<InfractionEvent>,
    pub game_time_s: f64,
    pub route_length_m: f64,
    pub progress_m: f64,
    pub ticks: u64,
    pub planning_events: u64,
    pub planning_calls: u64,
    pub constraint_calls: u64,
    pub override_ticks: u64,
    pub fail_safe_ticks: u64,
}

impl EpisodeResult {
    pub fn collisions(&self) -> usize {
        self.infractions
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    InfractionKind::CollisionPedestrian | InfractionKind::CollisionVehicle | InfractionKind::CollisionStatic
                )
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: usize,
    pub rc: f64,
    pub is_score: f64,
    pub ds: f64,
    pub as_speed: f64,
}

/// Arithmetic means, accumulated in the given order.
pub fn aggregate(results: &[EpisodeResult]) -> Aggregate {
    let n = results.len();
    let mean = |f: fn(&EpisodeResult) -> f64| {
        if n == 0 {
            0.0
        } else {
            results.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Aggregate {
        episodes: n,
        rc: mean(|r| r.rc),
        is_score: mean(|r| r.is_score),
        ds: mean(|r| r.ds),
        as_speed: mean(|r| r.as_speed),
    }
}

/// Per-episode rows plus a final `mean` row.
pub fn summary_csv(results: &[EpisodeResult]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "mode", "rc", "is", "ds", "as", "collisions", "infractions", "ticks"])?;
    for r in results {
        w.write_record([
            r.scenario.clone(),
            r.mode.clone(),
            format!("{:.4}", r.rc),
            format!("{:.4}", r.is_score),
            format!("{:.4}", r.ds),
            format!("{:.4}", r.as_speed),
            r.collisions().to_string(),
            r.infractions.len().to_string(),
            r.ticks.to_string(),
        ])?;
    }
    let agg = aggregate(results);
    let mode = match results.first() {
        Some(first) if results.iter().all(|r| r.mode == first.mode) => first.mode.clone(),
        Some(_) => "mixed".to_string(),
        None => String::new(),
    };
    w.write_record([
        "mean".to_string(),
        mode,
        format!("{:.4}", agg.rc),
        format!("{:.4}", agg.is_score),
        format!("{:.4}", agg.ds),
        format!("{:.4}", agg.as_speed),
        results.iter().map(EpisodeResult::collisions).sum::<usize>().to_string(),
        results.iter().map(|r| r.infractions.len()).sum::<usize>().to_string(),
        results.iter().map(|r| r.ticks).sum::<u64>().to_string(),
    ])?;
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
