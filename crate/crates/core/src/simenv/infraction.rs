use serde::{Deserialize, Serialize};

use super::{ActorState, WorldState, EGO_LENGTH_M, EGO_WIDTH_M, STOPPED_SPEED};
use crate::domain::{LightState, ObjectClass, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfractionKind {
    CollisionPedestrian,
    CollisionVehicle,
    CollisionStatic,
    RedLight,
    StopSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfractionEvent {
    pub tick: u64,
    pub kind: InfractionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_id: Option<u32>,
}

fn corners(p: &Pose, length: f64, width: f64) -> [[f64; 2]; 4] {
    let (s, c) = p.heading.sin_cos();
    let (hl, hw) = (0.5 * length, 0.5 * width);
    [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)].map(|(a, b)| [p.x + c * a - s * b, p.y + s * a + c * b])
}

/// Separating-axis test for two oriented rectangles. Touching counts as
/// overlap.
pub fn footprints_overlap(a: &Pose, a_dims: (f64, f64), b: &Pose, b_dims: (f64, f64)) -> bool {
    let ca = corners(a, a_dims.0, a_dims.1);
    let cb = corners(b, b_dims.0, b_dims.1);
    let axes = [a.heading, a.heading + std::f64::consts::FRAC_PI_2, b.heading, b.heading + std::f64::consts::FRAC_PI_2];
    axes.iter().all(|&ang| {
        let (s, c) = ang.sin_cos();
        let proj = |pts: &[[f64; 2]; 4]| {
            pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let d = p[0] * c + p[1] * s;
                (lo.min(d), hi.max(d))
            })
        };
        let (alo, ahi) = proj(&ca);
        let (blo, bhi) = proj(&cb);
        alo <= bhi && blo <= ahi
    })
}

fn touching(w: &WorldState) -> Vec<ActorState> {
    let ego = w.ego.pose;
    w.actors()
        .into_iter()
        .filter(|a| footprints_overlap(&ego, (EGO_LENGTH_M, EGO_WIDTH_M), &a.pose, a.dimensions()))
        .collect()
}

fn collision_kind(a: &ActorState) -> InfractionKind {
    if a.is_static {
        InfractionKind::CollisionStatic
    } else if a.class == ObjectClass::Pedestrian {
        InfractionKind::CollisionPedestrian
    } else {
        InfractionKind::CollisionVehicle
    }
}

/// Events caused by the step from `prev` to `next`. A collision is reported
/// once, on the tick an overlap begins.
pub fn detect_infractions(prev: &WorldState, next: &WorldState) -> Vec<InfractionEvent> {
    let mut events = Vec::new();
    let before: Vec<u32> = touching(prev).iter().map(|a| a.id).collect();
    for a in touching(next) {
        if !before.contains(&a.id) {
            events.push(InfractionEvent {
                tick: next.tick,
                kind: collision_kind(&a),
                actor_id: Some(a.id),
            });
        }
    }

    let (f0, f1) = (prev.front_s(), next.front_s());
    let crossed = |line: f64| f0 < line && f1 >= line;
    for (i, light) in next.spec.traffic_lights.iter().enumerate() {
        if crossed(light.stop_line_s) && prev.light_state(i) == LightState::Red {
            events.push(InfractionEvent {
                tick: next.tick,
                kind: InfractionKind::RedLight,
                actor_id: Some(light.id),
            });
        }
    }
    for (i, sign) in next.spec.stop_signs.iter().enumerate() {
        if crossed(sign.stop_line_s) && next.ego.v > STOPPED_SPEED && !prev.served[i] {
            events.push(InfractionEvent {
                tick: next.tick,
                kind: InfractionKind::StopSign,
                actor_id: Some(sign.id),
            });
        }
    }
    events
}
